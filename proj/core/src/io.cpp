#include "wspd/io.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "wspd/error.hpp"
#include "wspd/version.hpp"

namespace wspd {

namespace fs = std::filesystem;
using nlohmann::json;

const char* tool_version() noexcept { return WSPD_VERSION; }

fs::path resolve_output_dir(const std::string& explicit_dir, const std::string& configured) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv(output_dir_env); env && *env) return env;
  return configured;
}

OutputSink::OutputSink(fs::path dir, std::string digest) : dir_(std::move(dir)), digest_(std::move(digest)) {}

std::string OutputSink::header_line() const {
  return std::string("# wspd ") + tool_version() + " config_digest=" + digest_;
}

fs::path OutputSink::target(const std::string& name) {
  const fs::path rel(name);
  if (rel.empty() || rel.is_absolute()) throw ConfigError("output name '" + name + "' must be a relative path");
  for (const auto& part : rel)
    if (part == "..") throw ConfigError("output name '" + name + "' escapes the output directory");
  const fs::path full = dir_ / rel;
  std::error_code ec;
  fs::create_directories(full.parent_path(), ec);
  if (ec) throw ConfigError("cannot create output directory '" + full.parent_path().string() + "': " + ec.message());
  return full;
}

fs::path OutputSink::write_text(const std::string& name, const std::function<void(std::ostream&)>& body) {
  const auto path = target(name);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << header_line() << '\n';
  body(out);
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
  written_.push_back(path);
  return path;
}

json file_header(const std::string& digest) {
  return {{"tool", "wspd"}, {"version", tool_version()}, {"config_digest", digest}};
}

fs::path OutputSink::write_json(const std::string& name, json doc) {
  const auto path = target(name);
  doc["_header"] = file_header(digest_);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << to_json_text(doc);
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
  written_.push_back(path);
  return path;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

RunManifest::RunManifest(std::string digest) : digest_(std::move(digest)), started_(utc_timestamp()) {}

RunManifest::Entry& RunManifest::add(std::string command) {
  entries_.push_back({std::move(command), "ok", "", {}, {}});
  return entries_.back();
}

void RunManifest::finish() { finished_ = utc_timestamp(); }

json RunManifest::to_json() const {
  json cmds = json::array();
  for (const auto& e : entries_) {
    json seeds = json::object();
    for (const auto& [k, v] : e.seeds) seeds[k] = v;
    cmds.push_back({{"command", e.command}, {"status", e.status}, {"message", e.message},
                    {"files", e.files}, {"seeds", seeds}});
  }
  return {{"tool_version", tool_version()}, {"config_digest", digest_}, {"started_utc", started_},
          {"finished_utc", finished_}, {"commands", cmds}};
}

namespace {

void write_matrix(std::ostream& out, const FieldComponent& c, bool imag) {
  out << std::setprecision(10);
  for (std::size_t iy = 0; iy < c.ny(); ++iy)
    for (std::size_t ix = 0; ix < c.nx(); ++ix) {
      const auto v = c.at(ix, iy);
      out << (imag ? v.imag() : v.real()) << (ix + 1 < c.nx() ? ',' : '\n');
    }
}

}  // namespace

std::vector<fs::path> write_mode_fields(OutputSink& sink, const std::string& stem, const ModeSolution& mode,
                                        const PermittivityGrid& grid) {
  std::vector<fs::path> files;
  const std::pair<const char*, const FieldComponent*> comps[] = {
      {"ex", &mode.ex}, {"ey", &mode.ey}, {"ez", &mode.ez}, {"hx", &mode.hx}, {"hy", &mode.hy}, {"hz", &mode.hz}};
  json sidecar;
  for (const auto& [name, c] : comps) {
    for (bool imag : {false, true}) {
      const std::string file = stem + "_" + name + (imag ? "_im" : "_re") + ".csv";
      files.push_back(sink.write_text(file, [&](std::ostream& out) { write_matrix(out, *c, imag); }));
    }
    sidecar["components"][name] = {{"x_m", c->x}, {"y_m", c->y}, {"rows", "y"},
                                   {"files", {stem + "_" + name + "_re.csv", stem + "_" + name + "_im.csv"}}};
  }
  files.push_back(sink.write_text(stem + "_eps_re.csv", [&](std::ostream& out) {
    std::ostringstream im;
    grid.write_eps_csv(out, im);
  }));
  files.push_back(sink.write_text(stem + "_eps_im.csv", [&](std::ostream& out) {
    std::ostringstream re;
    grid.write_eps_csv(re, out);
  }));
  sidecar["permittivity"] = {{"x_edges_m", grid.x_edges()}, {"y_edges_m", grid.y_edges()},
                             {"files", {stem + "_eps_re.csv", stem + "_eps_im.csv"}}};
  sidecar["mode"] = {{"n_eff_re", mode.n_eff.real()},
                     {"n_eff_im", mode.n_eff.imag()},
                     {"alpha_per_cm", modal_absorption_per_cm(mode)},
                     {"te_fraction", mode.te_fraction},
                     {"wavelength_nm", mode.wavelength_m * 1e9},
                     {"power_w", mode.power_w},
                     {"units", {{"e", "V/m"}, {"h", "A/m"}}}};
  files.push_back(sink.write_json(stem + ".json", sidecar));
  return files;
}

std::vector<fs::path> write_count_record(OutputSink& sink, const std::string& stem, const CountRecord& rec) {
  std::vector<fs::path> files;
  files.push_back(sink.write_text(stem + ".csv", [&](std::ostream& out) {
    out << "timestamp_s,flag\n" << std::setprecision(17);
    for (const auto& e : rec.events) out << e.recorded_s << ',' << (e.kind == EventKind::photon ? "photon" : "dark") << '\n';
  }));
  json meta = {{"power_W", rec.power_w},
               {"wavelength_nm", rec.wavelength_m * 1e9},
               {"normalized_bias", rec.normalized_bias},
               {"duration_s", rec.duration_s},
               {"dead_time_s", rec.dead_time_s},
               {"sqe", rec.sqe},
               {"seed", rec.seed},
               {"events", rec.events.size()},
               {"events_file", stem + ".csv"}};
  files.push_back(sink.write_json(stem + ".json", meta));
  return files;
}

fs::path write_pulse_trace(OutputSink& sink, const std::string& name, const PulseTrace& trace) {
  return sink.write_text(name, [&](std::ostream& out) {
    out << "t_s,v\n" << std::setprecision(12);
    for (std::size_t k = 0; k < trace.t_s.size(); ++k) out << trace.t_s[k] << ',' << trace.v[k] << '\n';
  });
}

std::string to_json_text(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace wspd
