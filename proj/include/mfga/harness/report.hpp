#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mfga/certify.hpp"
#include "mfga/harness/config.hpp"

namespace mfga::harness {

using Json = nlohmann::ordered_json;

struct ReportCheck {
  std::string name;
  bool pass;
  double value;
  double threshold;
  std::string relation; // how value is compared with threshold
};

struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Everything a run emits: config echo, ledger, metrics, checks, CSV tables.
class RunReport {
public:
  RunReport(std::string command, const RunConfig &cfg);

  void check(const std::string &name, bool pass, double value, double threshold, const std::string &relation);
  void ledger(const ConstantLedger &l);
  Json &metrics() { return metrics_; }
  Table &table(const std::string &file, std::vector<std::string> header);
  /// Pre-rendered file written verbatim next to report.json.
  void attach(const std::string &file, std::string content) { files_.emplace_back(file, std::move(content)); }
  const std::vector<std::pair<std::string, std::string>> &attachments() const { return files_; }

  bool passed() const;
  std::vector<std::string> failing() const;
  const std::vector<ReportCheck> &checks() const { return checks_; }
  const std::vector<Table> &tables() const { return tables_; }

  /// wall_clock < 0 omits the field.
  Json to_json(double wall_clock) const;

private:
  std::string command_;
  std::uint64_t seed_;
  Json config_;
  Json ledger_;
  Json metrics_ = Json::object();
  std::vector<ReportCheck> checks_;
  std::vector<Table> tables_;
  std::vector<std::pair<std::string, std::string>> files_;
};

Json ledger_json(const ConstantLedger &l);

/// Writes report.json and one CSV per table into dir (created if missing).
void write_report(const RunReport &report, const std::string &dir, double wall_clock);

} // namespace mfga::harness
