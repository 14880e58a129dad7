#include "mfga/harness/report.hpp"

#include <filesystem>
#include <fstream>

#include "mfga/errors.hpp"

namespace mfga::harness {

RunReport::RunReport(std::string command, const RunConfig &cfg)
    : command_(std::move(command)), seed_(cfg.experiment.seed), config_(Json::object()) {
  for (const auto &[section, keys] : cfg.echo) {
    Json s = Json::object();
    for (const auto &[k, v] : keys)
      s[k] = v;
    config_[section] = s;
  }
}

void RunReport::check(const std::string &name, bool pass, double value, double threshold,
                      const std::string &relation) {
  checks_.push_back({name, pass, value, threshold, relation});
}

void RunReport::ledger(const ConstantLedger &l) {
  ledger_ = ledger_json(l);
  for (const auto &c : l.checks)
    if (c.binding)
      check("ledger." + c.name, c.pass, c.lhs, c.rhs, "margin >= -1e-9");
}

Table &RunReport::table(const std::string &file, std::vector<std::string> header) {
  tables_.push_back({file, std::move(header), {}});
  return tables_.back();
}

bool RunReport::passed() const {
  for (const auto &c : checks_)
    if (!c.pass)
      return false;
  return true;
}

std::vector<std::string> RunReport::failing() const {
  std::vector<std::string> out;
  for (const auto &c : checks_)
    if (!c.pass)
      out.push_back(c.name);
  return out;
}

Json ledger_json(const ConstantLedger &l) {
  Json j;
  Json k;
  k["spectral"] = {{"kappa_lo", l.spectral.kappa_lo},
                   {"kappa_hi", l.spectral.kappa_hi},
                   {"kappa_prime", l.spectral.kappa_prime},
                   {"opnorm", l.spectral.opnorm}};
  k["la0_bound"] = l.la0_bound;
  k["la0_method"] = la0_method_name(l.la0_method);
  k["la0_warning"] = l.la0_warning;
  k["la0_violations"] = l.la0_violations;
  k["theta1"] = l.theta1;
  k["theta2"] = l.theta2;
  k["theta3"] = l.theta3;
  k["lxx_u_theta3"] = l.lxx_u_theta3;
  k["lambda0"] = l.lambda0;
  k["kappa_ratio"] = l.kappa_ratio;
  if (l.has_cond) {
    auto mat = [](const Eigen::Matrix3d &m) {
      Json rows = Json::array();
      for (int i = 0; i < 3; ++i)
        rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
      return rows;
    };
    k["a1"] = mat(l.cond.a1);
    k["a2"] = mat(l.cond.a2);
  }
  k["xp_threshold"] = {{"kappa_ratio", l.xp.kappa_ratio},
                       {"stated_condition", l.xp.stated_condition},
                       {"psd_condition", l.xp.psd_condition},
                       {"psd_min_eig", l.xp.psd_min_eig},
                       {"psd_threshold", l.xp.psd_threshold}};
  k["derived_h"] = {{"lxp_lo", l.derived_h.lxp_lo},
                    {"lxp_hi", l.derived_h.lxp_hi},
                    {"lxx_lo", l.derived_h.lxx_lo},
                    {"lxx_hi", l.derived_h.lxx_hi},
                    {"l2", l.derived_h.l2}};
  j["constants"] = k;
  Json checks = Json::array();
  for (const auto &c : l.checks)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"margin", c.margin},
                      {"lhs", c.lhs},
                      {"rhs", c.rhs},
                      {"tolerance", kMarginTol},
                      {"binding", c.binding}});
  j["checks"] = checks;
  j["passed"] = l.passed();
  return j;
}

Json RunReport::to_json(double wall_clock) const {
  Json j;
  j["command"] = command_;
  j["seed"] = seed_;
  j["config"] = config_;
  if (!ledger_.is_null())
    j["ledger"] = ledger_;
  j["metrics"] = metrics_;
  Json checks = Json::array();
  for (const auto &c : checks_)
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"relation", c.relation}});
  j["checks"] = checks;
  j["passed"] = passed();
  Json files = Json::array();
  for (const auto &t : tables_)
    files.push_back(t.file);
  for (const auto &f : files_)
    files.push_back(f.first);
  j["tables"] = files;
  if (wall_clock >= 0.0)
    j["wall_clock_seconds"] = wall_clock;
  return j;
}

void write_report(const RunReport &report, const std::string &dir, double wall_clock) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw Error("cannot create output directory '" + dir + "': " + ec.message());
  auto open = [&](const std::string &name) {
    std::ofstream f(fs::path(dir) / name, std::ios::binary | std::ios::trunc);
    if (!f)
      throw Error("cannot write '" + (fs::path(dir) / name).string() + "'");
    return f;
  };
  {
    auto f = open("report.json");
    f << report.to_json(wall_clock).dump(2) << '\n';
  }
  for (const auto &t : report.tables()) {
    auto f = open(t.file);
    for (std::size_t i = 0; i < t.header.size(); ++i)
      f << (i ? "," : "") << t.header[i];
    f << '\n';
    for (const auto &row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        f << (i ? "," : "") << row[i];
      f << '\n';
    }
  }
  for (const auto &[name, content] : report.attachments()) {
    auto f = open(name);
    f << content;
  }
}

} // namespace mfga::harness
