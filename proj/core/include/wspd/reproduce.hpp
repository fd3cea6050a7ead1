#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wspd/config.hpp"
#include "wspd/io.hpp"

namespace wspd {

enum class CheckStatus { pass, fail, not_run };
const char* to_string(CheckStatus s) noexcept;

struct Check {
  std::string stage;
  std::string name;
  double value = 0.0;
  double lower = 0.0;  ///< inclusive pass band
  double upper = 0.0;
  std::string unit;
  CheckStatus status = CheckStatus::not_run;
  std::string note;
};

struct StageResult {
  std::string name;
  std::string status = "ok";  ///< ok | failed | skipped
  std::string message;
  double seconds = 0.0;
  std::vector<std::string> files;
  std::map<std::string, std::uint64_t> seeds;
  std::map<std::string, double> values;  ///< informational outputs
};

struct ReproduceReport {
  std::vector<StageResult> stages;
  std::vector<Check> checks;

  bool all_pass() const;
  nlohmann::json to_json() const;
  void write_table(std::ostream& out) const;
  void write_csv(std::ostream& out) const;
};

/// Stage names, in execution order.
const std::vector<std::string>& reproduce_stages();

/// Run every paper-anchored computation from `config`, writing plot-ready
/// files through `sink`. Stage failures are recorded, never thrown;
/// checks whose inputs come from a failed or skipped stage are not run.
ReproduceReport reproduce_paper(const ProjectConfig& config, OutputSink& sink,
                                const std::set<std::string>& skip = {},
                                const std::function<void(const std::string&)>& progress = {});

}  // namespace wspd
