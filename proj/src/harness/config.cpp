#include "mfga/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "mfga/certify.hpp"
#include "mfga/errors.hpp"
#include "mfga/seeds.hpp"
#include "mfga/solver/csv.hpp"

namespace mfga::harness {

namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line, const std::string &msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double to_double(const std::string &v, int line, const std::string &key) {
  double out = 0.0;
  const char *first = v.data(), *last = v.data() + v.size();
  if (!v.empty() && *first == '+')
    ++first;
  const auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last || !std::isfinite(out))
    fail(line, "'" + key + "' expects a real number, got '" + v + "'");
  return out;
}

long long to_int(const std::string &v, int line, const std::string &key) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    fail(line, "'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string &v, int line, const std::string &key) {
  if (v == "true" || v == "1" || v == "yes")
    return true;
  if (v == "false" || v == "0" || v == "no")
    return false;
  fail(line, "'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string &v, int line, const std::string &key) {
  std::vector<double> out;
  if (trim(v).empty())
    return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(to_double(trim(item), line, key));
  return out;
}

std::string list_str(const std::vector<double> &v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i)
    s += (i ? ", " : "") + fmt17(v[i]);
  return s;
}

std::string choice(const std::string &v, std::initializer_list<const char *> allowed, int line,
                   const std::string &key) {
  for (const char *a : allowed)
    if (v == a)
      return v;
  std::string msg = "'" + key + "' must be one of";
  for (const char *a : allowed)
    msg += std::string(" ") + a;
  fail(line, msg + ", got '" + v + "'");
}

Eigen::MatrixXd to_matrix(const std::string &v, int line) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(v);
  std::string row;
  while (std::getline(ss, row, ';'))
    rows.push_back(to_list(row, line, "a0"));
  const std::size_t n = rows.size();
  if (n == 0)
    fail(line, "'a0' is empty");
  if (n == 1 && rows[0].size() == 1)
    return Eigen::MatrixXd::Constant(1, 1, rows[0][0]);
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n)
      fail(line, "'a0' must be square: rows separated by ';', entries by ','");
    for (std::size_t j = 0; j < n; ++j)
      m(i, j) = rows[i][j];
  }
  return m;
}

std::string matrix_str(const Eigen::MatrixXd &m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i)
      s += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      s += (j ? ", " : "") + fmt17(m(i, j));
  }
  return s;
}

struct Key {
  std::function<void(const std::string &, int)> set;
  std::function<std::string()> get;
};

using Table = std::vector<std::pair<std::string, std::vector<std::pair<std::string, Key>>>>;

Table make_table(RunConfig &c) {
  auto &m = c.model;
  auto &q = m.quad;
  auto &r = m.reg;
  auto &e = c.experiment;
  auto &o = c.output;
  auto &x = c.ex72;
  auto named_real = [](double &v, const char *key) {
    return Key{[&v, key](const std::string &s, int line) { v = to_double(s, line, key); }, [&v] { return fmt17(v); }};
  };
  auto named_int = [](int &v, const char *key, long long lo) {
    return Key{[&v, key, lo](const std::string &s, int line) {
                 const long long n = to_int(s, line, key);
                 if (n < lo || n > 100000000)
                   fail(line, std::string("'") + key + "' must be >= " + std::to_string(lo));
                 v = static_cast<int>(n);
               },
               [&v] { return std::to_string(v); }};
  };
  auto named_list = [](std::vector<double> &v, const char *key) {
    return Key{[&v, key](const std::string &s, int line) { v = to_list(s, line, key); },
               [&v] { return list_str(v); }};
  };
  auto named_str = [](std::string &v, std::initializer_list<const char *> allowed, const char *key) {
    std::vector<std::string> al(allowed.begin(), allowed.end());
    return Key{[&v, al, key](const std::string &s, int line) {
                 if (std::find(al.begin(), al.end(), s) == al.end()) {
                   std::string msg = std::string("'") + key + "' must be one of";
                   for (const auto &a : al)
                     msg += " " + a;
                   fail(line, msg + ", got '" + s + "'");
                 }
                 v = s;
               },
               [&v] { return v; }};
  };
  auto family = [](Family &f, const char *key) {
    return Key{[&f, key](const std::string &s, int line) {
                 choice(s, {"quadratic"}, line, key);
                 f = Family::Quadratic;
               },
               [&f] { return std::string(family_name(f)); }};
  };

  Table t;
  t.push_back({"model",
               {{"source", {[&c](const std::string &s, int line) {
                              c.source = choice(s, {"explicit", "example72"}, line, "source") == "explicit"
                                             ? ModelSource::Explicit
                                             : ModelSource::Example72;
                            },
                            [&c] { return std::string(c.source == ModelSource::Explicit ? "explicit" : "example72"); }}},
                {"a0", {[&m](const std::string &s, int line) {
                          m.a0 = to_matrix(s, line);
                          m.dim = static_cast<int>(m.a0.rows());
                        },
                        [&m] { return matrix_str(m.a0); }}},
                {"a0_scale", named_real(c.a0_scale, "a0_scale")},
                {"h0_family", family(m.h0_family, "h0_family")},
                {"g_family", family(m.g_family, "g_family")},
                {"g0", named_real(q.g0, "g0")},
                {"g1", named_real(q.g1, "g1")},
                {"h_quad", named_real(q.h_quad, "h_quad")},
                {"h_xmu", named_real(q.h_xmu, "h_xmu")},
                {"h_xx", named_real(q.h_xx, "h_xx")},
                {"beta", named_real(m.beta, "beta")},
                {"horizon", named_real(m.horizon, "horizon")},
                {"l2_h0", named_real(r.l2_h0, "l2_h0")},
                {"lxx_h0_lo", named_real(r.lxx_h0_lo, "lxx_h0_lo")},
                {"lxx_h0_hi", named_real(r.lxx_h0_hi, "lxx_h0_hi")},
                {"l2_g", named_real(r.l2_g, "l2_g")},
                {"lxx_g_hi", named_real(r.lxx_g_hi, "lxx_g_hi")},
                {"gamma_lo", named_real(r.gamma_lo, "gamma_lo")},
                {"gamma_hi", named_real(r.gamma_hi, "gamma_hi")},
                {"la_bar", named_real(r.la_bar, "la_bar")},
                {"alpha_lo", named_real(x.alpha_lo, "alpha_lo")},
                {"alpha_hi", named_real(x.alpha_hi, "alpha_hi")},
                {"m0_start", named_real(x.m0_start, "m0_start")},
                {"max_doublings", named_int(x.max_doublings, "max_doublings", 0)}}});
  t.push_back({"lambda",
               {{"lambda0", named_real(c.lambda[0], "lambda0")},
                {"lambda1", named_real(c.lambda[1], "lambda1")},
                {"lambda2", named_real(c.lambda[2], "lambda2")},
                {"lambda3", named_real(c.lambda[3], "lambda3")}}});
  t.push_back({"experiment",
               {{"seed", {[&e](const std::string &s, int line) {
                            const long long v = to_int(s, line, "seed");
                            if (v < 0)
                              fail(line, "'seed' must be >= 0");
                            e.seed = static_cast<std::uint64_t>(v);
                          },
                          [&e] { return std::to_string(e.seed); }}},
                {"t_steps", named_int(e.t_steps, "t_steps", 1)},
                {"dx", named_real(e.dx, "dx")},
                {"x_lo", named_real(e.x_lo, "x_lo")},
                {"x_hi", named_real(e.x_hi, "x_hi")},
                {"tol", named_real(e.tol, "tol")},
                {"max_picard", named_int(e.max_picard, "max_picard", 1)},
                {"relaxation", named_real(e.relaxation, "relaxation")},
                {"init", named_str(e.init, {"zero", "terminal", "both"}, "init")},
                {"mu0_kind", named_str(e.mu0_kind, {"normal", "uniform", "points"}, "mu0_kind")},
                {"mu0_atoms", named_int(e.mu0_atoms, "mu0_atoms", 1)},
                {"mu0_mean", named_real(e.mu0_mean, "mu0_mean")},
                {"mu0_sd", named_real(e.mu0_sd, "mu0_sd")},
                {"mu0_points", named_list(e.mu0_points, "mu0_points")},
                {"eta_kind", named_str(e.eta_kind, {"constant", "linear", "normal"}, "eta_kind")},
                {"mc_trials", named_int(e.mc_trials, "mc_trials", 1)},
                {"mc_atoms", named_int(e.mc_atoms, "mc_atoms", 1)},
                {"mc_radius", named_real(e.mc_radius, "mc_radius")},
                {"mc_times", named_list(e.mc_times, "mc_times")},
                {"field_dx", named_real(e.field_dx, "field_dx")},
                {"field_dt", named_real(e.field_dt, "field_dt")},
                {"fd_eps", named_real(e.fd_eps, "fd_eps")},
                {"bump_scales", named_list(e.bump_scales, "bump_scales")},
                {"x_probes", named_list(e.x_probes, "x_probes")},
                {"lipschitz_mode", named_str(e.lipschitz_mode, {"W1", "W2"}, "lipschitz_mode")},
                {"lipschitz_directions", named_int(e.lipschitz_directions, "lipschitz_directions", 0)},
                {"fbsde_steps", named_int(e.fbsde_steps, "fbsde_steps", 1)},
                {"flow_steps", named_int(e.flow_steps, "flow_steps", 1)},
                {"paths_per_atom", named_int(e.paths_per_atom, "paths_per_atom", 1)},
                {"gamma_c", named_real(e.gamma_c, "gamma_c")},
                {"sweep_key", {[&e](const std::string &s, int) { e.sweep_key = s; }, [&e] { return e.sweep_key; }}},
                {"sweep_values", named_list(e.sweep_values, "sweep_values")},
                {"jobs", named_int(e.jobs, "jobs", 1)}}});
  t.push_back({"output",
               {{"dir", {[&o](const std::string &s, int) { o.dir = s; }, [&o] { return o.dir; }}},
                {"t_stride", named_int(o.t_stride, "t_stride", 1)},
                {"x_stride", named_int(o.x_stride, "x_stride", 1)},
                {"write_csv", {[&o](const std::string &s, int line) { o.write_csv = to_bool(s, line, "write_csv"); },
                               [&o] { return std::string(o.write_csv ? "true" : "false"); }}}}});
  return t;
}

const std::vector<std::string> kExample72ModelKeys{"source",   "a0_scale", "horizon", "alpha_lo",  "alpha_hi",
                                                   "gamma_lo", "gamma_hi", "l2_g",    "l2_h0",     "m0_start",
                                                   "max_doublings"};

} // namespace

RunConfig parse_config(const std::string &text) {
  RunConfig cfg;
  cfg.model.horizon = 0.5;
  Table table = make_table(cfg);
  std::map<std::string, int> seen; // "section.key" -> line
  std::map<std::string, int> sections;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto h = s.find('#'); h != std::string::npos)
      s = s.substr(0, h);
    s = trim(s);
    if (s.empty())
      continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        fail(line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      const bool known = std::any_of(table.begin(), table.end(), [&](const auto &p) { return p.first == section; });
      if (!known)
        fail(line, "unknown section [" + section + "]");
      if (const auto it = sections.find(section); it != sections.end())
        fail(line, "duplicate section [" + section + "] (first on line " + std::to_string(it->second) + ")");
      sections[section] = line;
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      fail(line, "expected 'key = value'");
    if (section.empty())
      fail(line, "key outside of any section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    auto &keys = std::find_if(table.begin(), table.end(), [&](const auto &p) { return p.first == section; })->second;
    const auto k = std::find_if(keys.begin(), keys.end(), [&](const auto &p) { return p.first == key; });
    if (k == keys.end())
      fail(line, "unknown key '" + key + "' in [" + section + "]");
    const std::string full = section + "." + key;
    if (const auto it = seen.find(full); it != seen.end())
      fail(line, "duplicate key '" + key + "' in [" + section + "] (lines " + std::to_string(it->second) + " and " +
                     std::to_string(line) + ")");
    seen[full] = line;
    k->second.set(value, line);
  }

  auto line_of = [&](const std::string &full) {
    const auto it = seen.find(full);
    return it == seen.end() ? 0 : it->second;
  };
  if (cfg.source == ModelSource::Example72) {
    for (const auto &[full, l] : seen)
      if (full.rfind("model.", 0) == 0 &&
          std::find(kExample72ModelKeys.begin(), kExample72ModelKeys.end(), full.substr(6)) == kExample72ModelKeys.end())
        fail(l, "'" + full.substr(6) + "' is derived when source = example72");
    if (seen.count("lambda.lambda0"))
      fail(line_of("lambda.lambda0"), "'lambda0' is derived when source = example72");
  } else {
    for (const char *k : {"alpha_lo", "alpha_hi", "m0_start", "max_doublings"})
      if (seen.count(std::string("model.") + k))
        fail(line_of(std::string("model.") + k), std::string("'") + k + "' only applies to source = example72");
  }
  if (cfg.source == ModelSource::Example72) {
    cfg.ex72.gamma_lo = cfg.model.reg.gamma_lo;
    cfg.ex72.gamma_hi = cfg.model.reg.gamma_hi;
    cfg.ex72.l2_g = cfg.model.reg.l2_g;
    cfg.ex72.l2_h0 = cfg.model.reg.l2_h0;
  }

  // λ⃗ admissibility, citing the offending line.
  const double l0 = cfg.source == ModelSource::Example72 ? 1.0 : cfg.lambda[0];
  try {
    VecLambda(l0, cfg.lambda[1], cfg.lambda[2], cfg.lambda[3]);
  } catch (const D4Violation &err) {
    int l = 0;
    if (!(l0 > 0.0))
      l = line_of("lambda.lambda0");
    else if (!(cfg.lambda[2] > 0.0))
      l = line_of("lambda.lambda2");
    else
      l = line_of("lambda.lambda3");
    fail(l, std::string(err.what()) + " (D4)");
  }

  auto check = [&](bool ok, const std::string &full, const std::string &msg) {
    if (!ok)
      fail(line_of(full), msg);
  };
  const auto &e = cfg.experiment;
  check(e.dx > 0.0, "experiment.dx", "'dx' must be > 0");
  check(e.tol > 0.0, "experiment.tol", "'tol' must be > 0");
  check(e.relaxation > 0.0 && e.relaxation <= 1.0, "experiment.relaxation", "'relaxation' must be in (0, 1]");
  check(std::isfinite(e.x_lo) == std::isfinite(e.x_hi), std::isfinite(e.x_lo) ? "experiment.x_lo" : "experiment.x_hi",
        "'x_lo' and 'x_hi' must be given together");
  check(e.mu0_sd > 0.0, "experiment.mu0_sd", "'mu0_sd' must be > 0");
  check(e.mu0_kind != "points" || !e.mu0_points.empty(), "experiment.mu0_kind",
        "mu0_kind = points needs 'mu0_points'");
  check(e.mc_radius > 0.0, "experiment.mc_radius", "'mc_radius' must be > 0");
  check(e.field_dx > 0.0 && e.field_dt > 0.0, "experiment.field_dx", "'field_dx' and 'field_dt' must be > 0");
  check(e.fd_eps > 0.0, "experiment.fd_eps", "'fd_eps' must be > 0");
  for (double s : e.bump_scales)
    check(s > 0.0, "experiment.bump_scales", "'bump_scales' must be positive");
  check(!e.bump_scales.empty(), "experiment.bump_scales", "'bump_scales' is empty");
  check(!e.x_probes.empty(), "experiment.x_probes", "'x_probes' is empty");
  check(e.sweep_key.empty() || !e.sweep_values.empty(), "experiment.sweep_key", "'sweep_key' needs 'sweep_values'");
  if (!e.sweep_key.empty()) {
    RunConfig probe = cfg;
    try {
      set_parameter(probe, e.sweep_key, e.sweep_values.front());
    } catch (const ConfigError &) {
      fail(line_of("experiment.sweep_key"), "'" + e.sweep_key + "' cannot be swept");
    }
  }
  if (cfg.source == ModelSource::Explicit) {
    try {
      cfg.model.validate();
    } catch (const InvalidArgument &err) {
      fail(line_of("model.source"), err.what());
    }
  }

  for (auto &[name, keys] : table) {
    std::map<std::string, std::string> vals;
    for (auto &[k, key] : keys)
      vals[k] = key.get();
    cfg.echo.emplace_back(name, std::move(vals));
  }
  return cfg;
}

RunConfig load_config(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

ResolvedModel resolve_model(const RunConfig &cfg) {
  if (cfg.source == ModelSource::Explicit) {
    ModelSpec m = cfg.model;
    m.a0 *= cfg.a0_scale;
    m.validate();
    return {m, cfg.lam()};
  }
  const auto &x = cfg.ex72;
  Example72Options opt;
  opt.m0_start = x.m0_start;
  opt.max_doublings = x.max_doublings;
  opt.horizon = cfg.model.horizon;
  auto res = construct_example72(x.alpha_lo, x.alpha_hi, x.gamma_lo, x.gamma_hi, cfg.lambda[1], cfg.lambda[2],
                                 cfg.lambda[3], x.l2_g, x.l2_h0, opt);
  res.model.a0 *= cfg.a0_scale;
  return {res.model, res.lam, res.m0};
}

void set_parameter(RunConfig &cfg, const std::string &key, double value) {
  auto &q = cfg.model.quad;
  auto &r = cfg.model.reg;
  std::map<std::string, double *> slots{
      {"g0", &q.g0},           {"g1", &q.g1},
      {"h_quad", &q.h_quad},   {"h_xmu", &q.h_xmu},
      {"h_xx", &q.h_xx},       {"beta", &cfg.model.beta},
      {"horizon", &cfg.model.horizon},
      {"l2_h0", &r.l2_h0},     {"lxx_h0_lo", &r.lxx_h0_lo},
      {"lxx_h0_hi", &r.lxx_h0_hi},
      {"l2_g", &r.l2_g},       {"lxx_g_hi", &r.lxx_g_hi},
      {"gamma_lo", &r.gamma_lo},
      {"gamma_hi", &r.gamma_hi},
      {"la_bar", &r.la_bar},   {"a0_scale", &cfg.a0_scale},
      {"lambda0", &cfg.lambda[0]},
      {"lambda1", &cfg.lambda[1]},
      {"lambda2", &cfg.lambda[2]},
      {"lambda3", &cfg.lambda[3]},
      {"alpha_lo", &cfg.ex72.alpha_lo},
      {"alpha_hi", &cfg.ex72.alpha_hi},
      {"m0_start", &cfg.ex72.m0_start}};
  if (key == "a0") {
    if (cfg.model.dim != 1)
      throw ConfigError("sweep over 'a0' needs a scalar model");
    cfg.model.a0(0, 0) = value;
    return;
  }
  const auto it = slots.find(key);
  if (it == slots.end())
    throw ConfigError("unknown sweep key '" + key + "'");
  *it->second = value;
  if (cfg.source == ModelSource::Example72) {
    cfg.ex72.gamma_lo = r.gamma_lo;
    cfg.ex72.gamma_hi = r.gamma_hi;
    cfg.ex72.l2_g = r.l2_g;
    cfg.ex72.l2_h0 = r.l2_h0;
  }
}

EmpiricalMeasure initial_measure(const ExperimentConfig &e) {
  if (e.mu0_kind == "points")
    return make_empirical(e.mu0_points);
  std::vector<double> pts(static_cast<std::size_t>(e.mu0_atoms));
  if (e.mu0_kind == "uniform") {
    const double half = std::sqrt(3.0) * e.mu0_sd;
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
      pts[i] = n == 1 ? e.mu0_mean
                      : e.mu0_mean - half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
    return make_empirical(pts);
  }
  std::mt19937_64 rng(derive_seed(e.seed, "mu0"));
  std::normal_distribution<double> normal(e.mu0_mean, e.mu0_sd);
  for (double &p : pts)
    p = normal(rng);
  return make_empirical(pts);
}

} // namespace mfga::harness
