#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wspd/detector.hpp"
#include "wspd/grid.hpp"
#include "wspd/mode_solver.hpp"

namespace wspd {

/// Environment variable that overrides the configured output directory.
inline constexpr const char* output_dir_env = "WSPD_OUTPUT_DIR";

const char* tool_version() noexcept;

/// `explicit_dir` (if non-empty) wins, then $WSPD_OUTPUT_DIR, then `configured`.
std::filesystem::path resolve_output_dir(const std::string& explicit_dir, const std::string& configured);

/// Where files go and what every file is stamped with.
class OutputSink {
 public:
  OutputSink(std::filesystem::path dir, std::string digest);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const std::string& digest() const noexcept { return digest_; }
  /// "# wspd <version> config_digest=<digest>"
  std::string header_line() const;

  /// Text file whose first line is the header comment. `name` must be a
  /// plain relative path; the directory is created on demand.
  std::filesystem::path write_text(const std::string& name, const std::function<void(std::ostream&)>& body);
  /// JSON file with a leading "_header" object carrying version and digest.
  std::filesystem::path write_json(const std::string& name, nlohmann::json doc);

  const std::vector<std::filesystem::path>& written() const noexcept { return written_; }

 private:
  std::filesystem::path target(const std::string& name);

  std::filesystem::path dir_;
  std::string digest_;
  std::vector<std::filesystem::path> written_;
};

nlohmann::json file_header(const std::string& digest);

/// Record of one CLI run; serialized as manifest.json in the output directory.
class RunManifest {
 public:
  explicit RunManifest(std::string digest);

  struct Entry {
    std::string command;
    std::string status;  ///< "ok", "failed", "skipped", ...
    std::string message;
    std::vector<std::string> files;
    std::map<std::string, std::uint64_t> seeds;
  };

  Entry& add(std::string command);
  void finish();
  nlohmann::json to_json() const;
  std::vector<Entry>& entries() noexcept { return entries_; }

 private:
  std::string digest_;
  std::string started_, finished_;
  std::vector<Entry> entries_;
};

std::string utc_timestamp();

/// Component matrices (rows = y) of real and imaginary parts plus a JSON
/// sidecar with coordinates and mode summary. Returns the files written.
std::vector<std::filesystem::path> write_mode_fields(OutputSink& sink, const std::string& stem,
                                                     const ModeSolution& mode, const PermittivityGrid& grid);

/// `timestamp_s,flag` rows plus a JSON metadata file.
std::vector<std::filesystem::path> write_count_record(OutputSink& sink, const std::string& stem,
                                                      const CountRecord& record);

std::filesystem::path write_pulse_trace(OutputSink& sink, const std::string& name, const PulseTrace& trace);

/// Deterministic JSON text: sorted keys, two-space indent, trailing newline.
std::string to_json_text(const nlohmann::json& doc);

}  // namespace wspd
