#include "wspd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "wspd/error.hpp"

namespace wspd {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// anything left over can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError("config " + where(key) + ": " + what);
  }
  std::string where(const std::string& key) const {
    return key.empty() ? (path_.empty() ? "<root>" : path_) : (path_.empty() ? key : path_ + "." + key);
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key) && !j_.at(key).is_null();
  }

  const json& raw(const std::string& key) {
    if (!has(key)) fail(key, "required key is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }
  std::optional<double> optional_number(const std::string& key) {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

  double positive(const std::string& key) {
    const double v = number(key);
    if (!(v > 0.0)) fail(key, "must be > 0");
    return v;
  }
  double positive(const std::string& key, double fallback) { return has(key) ? positive(key) : fallback; }
  double non_negative(const std::string& key) {
    const double v = number(key);
    if (!(v >= 0.0)) fail(key, "must be >= 0");
    return v;
  }
  double non_negative(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return non_negative(key);
  }
  double fraction(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const double v = number(key);
    if (!(v >= 0.0 && v <= 1.0)) fail(key, "must lie in [0, 1]");
    return v;
  }

  std::int64_t integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) { return has(key) ? string(key) : fallback; }

  Reader object(const std::string& key) { return Reader(raw(key), where(key)); }

  const json& array(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail(key, "expected an array");
    return v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail(k, "unknown key");
  }

  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string indexed(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

MaterialLibrary read_materials(Reader& root) {
  std::vector<double> fractions{0.75, 0.70};
  std::vector<Material> custom;
  if (root.has("materials")) {
    auto r = root.object("materials");
    if (r.has("algaas_al_fractions")) {
      fractions.clear();
      for (const auto& v : r.array("algaas_al_fractions")) {
        if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0)
          r.fail("algaas_al_fractions", "entries must be numbers in [0, 1]");
        fractions.push_back(v.get<double>());
      }
    }
    if (r.has("custom")) {
      const auto& arr = r.array("custom");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Reader m(arr[i], indexed(r.where("custom"), i));
        const auto name = m.string("name");
        std::vector<IndexSample> table;
        const auto& rows = m.array("table");
        for (std::size_t k = 0; k < rows.size(); ++k) {
          Reader row(rows[k], indexed(m.where("table"), k));
          const double wl = row.positive("wavelength_nm") * 1e-9;
          const double n = row.number("n");
          const double kk = row.non_negative("k", 0.0);
          row.finish();
          table.push_back({wl, Complex(n, -kk)});
        }
        m.finish();
        try {
          custom.emplace_back(name, std::move(table));
        } catch (const ConfigError& e) {
          m.fail("table", e.what());
        }
      }
    }
    r.finish();
  }
  auto lib = builtin_library(fractions);
  for (auto& m : custom) lib.add(std::move(m));
  return lib;
}

CrossSection read_cross_section(Reader& root, MaterialLibrary lib) {
  auto r = root.object("cross_section");
  const double wavelength = r.positive("wavelength_nm") * 1e-9;

  LayerStack stack;
  stack.substrate = r.string("substrate");
  stack.ambient = r.string("ambient", "air");
  const auto& layers = r.array("layers");
  if (layers.empty()) r.fail("layers", "at least one layer is required");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Reader l(layers[i], indexed(r.where("layers"), i));
    Layer layer{l.string("material"), l.positive("thickness_nm") * 1e-9};
    l.finish();
    stack.layers.push_back(std::move(layer));
  }

  auto rr = r.object("ridge");
  RidgeSpec ridge{rr.positive("width_um") * 1e-6, rr.non_negative("etch_depth_nm") * 1e-9,
                  rr.number("center_um", 0.0) * 1e-6};
  rr.finish();

  std::optional<NanowireArray> wires;
  if (r.has("wires")) {
    auto w = r.object("wires");
    NanowireArray a;
    a.count = static_cast<int>(w.integer("count"));
    if (a.count < 1) w.fail("count", "must be >= 1");
    a.width_m = w.positive("width_nm") * 1e-9;
    a.pitch_m = w.positive("pitch_nm") * 1e-9;
    a.thickness_m = w.positive("thickness_nm") * 1e-9;
    a.material = w.string("material", a.material);
    a.cap_material = w.string("cap_material", a.cap_material);
    a.cap_thickness_m = w.non_negative("cap_thickness_nm", 0.0) * 1e-9;
    a.offset_m = w.number("offset_nm", 0.0) * 1e-9;
    w.finish();
    wires = a;
  }

  auto wr = r.object("window");
  Window window{wr.positive("width_um") * 1e-6, wr.positive("height_um") * 1e-6};
  wr.finish();
  r.finish();
  if (!lib.contains(stack.substrate)) r.fail("substrate", "unknown material '" + stack.substrate + "'");
  return {std::move(lib), std::move(stack), ridge, std::move(wires), window, wavelength};
}

ResolutionPolicy read_resolution(Reader& root) {
  ResolutionPolicy p;
  if (!root.has("resolution")) return p;
  auto r = root.object("resolution");
  p.base_m = r.positive("base_nm", p.base_m * 1e9) * 1e-9;
  p.fine_m = r.positive("fine_nm", p.fine_m * 1e9) * 1e-9;
  p.band_m = r.non_negative("band_nm", p.band_m * 1e9) * 1e-9;
  p.lateral_fine_m = r.positive("lateral_fine_nm", p.lateral_fine_m * 1e9) * 1e-9;
  p.far_m = r.positive("far_nm", p.far_m * 1e9) * 1e-9;
  p.grading = r.positive("grading", p.grading);
  p.core_band_m = r.non_negative("core_band_um", p.core_band_m * 1e6) * 1e-6;
  r.finish();
  if (p.far_m < p.base_m) root.fail("resolution", "far_nm must be >= base_nm");
  return p;
}

SolverConfig read_solver(Reader& root) {
  SolverConfig c;
  if (!root.has("solver")) return c;
  auto r = root.object("solver");
  c.modes = static_cast<int>(r.integer("modes", c.modes));
  if (c.modes < 1) r.fail("modes", "must be >= 1");
  c.target_index = r.optional_number("target_index");
  if (c.target_index && !(*c.target_index > 0.0)) r.fail("target_index", "must be > 0");
  c.tolerance = r.positive("tolerance", c.tolerance);
  c.max_restarts = static_cast<int>(r.integer("max_restarts", c.max_restarts));
  if (c.max_restarts < 0) r.fail("max_restarts", "must be >= 0");
  c.krylov_dim = static_cast<int>(r.integer("krylov_dim", 0));
  if (c.krylov_dim < 0) r.fail("krylov_dim", "must be >= 0");
  r.finish();
  return c;
}

void read_detector(Reader& root, DetectorModel& d, double& rise_s) {
  if (!root.has("detector")) return;
  auto r = root.object("detector");
  d.wire_count = static_cast<int>(r.integer("wire_count", d.wire_count));
  d.wire_length_m = r.positive("wire_length_um", d.wire_length_m * 1e6) * 1e-6;
  d.wire_width_m = r.positive("wire_width_nm", d.wire_width_m * 1e9) * 1e-9;
  d.sheet_inductance_h = r.positive("sheet_inductance_pH_per_sq", d.sheet_inductance_h * 1e12) * 1e-12;
  d.load_resistance_ohm = r.positive("load_resistance_ohm", d.load_resistance_ohm);
  d.critical_current_a = r.positive("critical_current_uA", d.critical_current_a * 1e6) * 1e-6;
  d.bias_current_a = r.positive("bias_current_uA", d.bias_current_a * 1e6) * 1e-6;
  if (r.has("internal_efficiency")) {
    auto q = r.object("internal_efficiency");
    d.internal.eta_max = q.number("eta_max", d.internal.eta_max);
    d.internal.midpoint = q.number("midpoint", d.internal.midpoint);
    d.internal.width = q.number("width", d.internal.width);
    q.finish();
  }
  if (r.has("dark_counts")) {
    auto q = r.object("dark_counts");
    d.dark.r0_per_s = q.non_negative("r0_per_s", d.dark.r0_per_s);
    d.dark.slope = q.number("slope", d.dark.slope);
    q.finish();
  }
  if (r.has("film")) {
    auto q = r.object("film");
    d.film.tc_k = q.positive("tc_K", d.film.tc_k);
    d.film.delta_tc_k = q.non_negative("delta_tc_K", d.film.delta_tc_k);
    q.finish();
  }
  rise_s = r.positive("pulse_rise_ps", rise_s * 1e12) * 1e-12;
  r.finish();
  d.validate();
}

ExperimentSpec read_experiment(Reader& root) {
  ExperimentSpec e;
  e.powers_w = {1e-14, 1.668e-14, 2.783e-14, 4.642e-14, 7.743e-14,
                1.292e-13, 2.154e-13, 3.594e-13, 5.995e-13, 1e-12};
  if (!root.has("experiment")) return e;
  auto r = root.object("experiment");
  if (r.has("powers_pW")) {
    e.powers_w.clear();
    for (const auto& v : r.array("powers_pW")) {
      if (!v.is_number() || v.get<double>() < 0.0) r.fail("powers_pW", "entries must be numbers >= 0");
      e.powers_w.push_back(v.get<double>() * 1e-12);
    }
  }
  e.wavelength_m = r.positive("wavelength_nm", e.wavelength_m * 1e9) * 1e-9;
  e.duration_s = r.positive("duration_s", e.duration_s);
  e.jitter_sigma_s = r.non_negative("jitter_sigma_ps", 0.0) * 1e-12;
  if (auto v = r.optional_number("dead_time_ns")) {
    if (*v < 0.0) r.fail("dead_time_ns", "must be >= 0");
    e.dead_time_s = *v * 1e-9;
  }
  if (auto v = r.optional_number("dark_rate_per_s")) {
    if (*v < 0.0) r.fail("dark_rate_per_s", "must be >= 0");
    e.dark_rate_per_s = *v;
  }
  r.finish();
  return e;
}

ParameterRange read_range(Reader& r) {
  ParameterRange range;
  range.parameter = parse_sweep_parameter(r.string("name"));
  if (range.parameter == SweepParameter::wire_count) {
    range.start = r.number("start");
    range.stop = r.number("stop");
    range.step = r.positive("step");
  } else {
    range.start = r.number("start_nm") * 1e-9;
    range.stop = r.number("stop_nm") * 1e-9;
    range.step = r.positive("step_nm") * 1e-9;
  }
  r.finish();
  return range;
}

std::vector<NamedSweep> read_sweeps(Reader& root) {
  std::vector<NamedSweep> out;
  if (!root.has("sweeps")) return out;
  const auto& arr = root.array("sweeps");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Reader r(arr[i], indexed(root.where("sweeps"), i));
    NamedSweep s;
    s.name = r.string("name");
    const auto mode = r.string("mode", "te");
    if (mode == "te")
      s.spec.selector = ModeSelector::fundamental_te;
    else if (mode == "tm")
      s.spec.selector = ModeSelector::first_tm;
    else
      r.fail("mode", "expected \"te\" or \"tm\"");
    s.spec.min_margin_m = r.non_negative("min_margin_um", 0.5) * 1e-6;
    const auto cap = r.integer("max_points", 10000);
    if (cap < 1) r.fail("max_points", "must be >= 1");
    s.spec.max_points = static_cast<std::size_t>(cap);
    const auto workers = r.integer("workers", 0);
    if (workers < 0) r.fail("workers", "must be >= 0");
    s.spec.workers = static_cast<unsigned>(workers);
    s.tolerance_m = r.positive("tolerance_nm", 5.0) * 1e-9;
    const auto& params = r.array("parameters");
    for (std::size_t k = 0; k < params.size(); ++k) {
      Reader p(params[k], indexed(r.where("parameters"), k));
      s.spec.ranges.push_back(read_range(p));
    }
    r.finish();
    try {
      s.spec.validate();
    } catch (const ConfigError& e) {
      r.fail("", e.what());
    }
    for (const auto& prev : out)
      if (prev.name == s.name) r.fail("name", "duplicate sweep name '" + s.name + "'");
    out.push_back(std::move(s));
  }
  return out;
}

ReproduceSpec read_reproduce(Reader& root) {
  ReproduceSpec s;
  if (!root.has("reproduce")) return s;
  auto r = root.object("reproduce");
  s.alpha_reference_per_cm = r.positive("alpha_reference_per_cm", s.alpha_reference_per_cm);
  s.alpha_rel_tol = r.positive("alpha_rel_tol", s.alpha_rel_tol);
  s.max_solve_seconds = r.positive("max_solve_s", s.max_solve_seconds);
  if (r.has("absorptance")) {
    s.absorptance_lengths_m.clear();
    s.absorptance_targets.clear();
    s.absorptance_tols.clear();
    const auto& arr = r.array("absorptance");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader a(arr[i], indexed(r.where("absorptance"), i));
      s.absorptance_lengths_m.push_back(a.positive("length_um") * 1e-6);
      s.absorptance_targets.push_back(a.fraction("target", 0.0));
      s.absorptance_tols.push_back(a.positive("tol"));
      a.finish();
    }
  }
  if (r.has("fringes")) {
    auto f = r.object("fringes");
    s.fringes.t_max = f.number("t_max");
    s.fringes.t_min = f.number("t_min");
    s.fringes.single_pass = f.number("single_pass", 1.0);
    f.finish();
    try {
      s.fringes.validate();
    } catch (const ConfigError& e) {
      r.fail("fringes", e.what());
    }
  }
  s.coupling_target = r.fraction("coupling_target", s.coupling_target);
  s.coupling_tol = r.positive("coupling_tol", s.coupling_tol);
  s.dqe_measured = r.fraction("dqe_measured", s.dqe_measured);
  s.chain_absorptance = r.fraction("chain_absorptance", s.chain_absorptance);
  s.sqe_target = r.fraction("sqe_target", s.sqe_target);
  s.sqe_tol = r.positive("sqe_tol", s.sqe_tol);
  s.tau_target_s = r.positive("tau_target_ns", s.tau_target_s * 1e9) * 1e-9;
  s.max_rate_target_hz = r.positive("max_rate_target_MHz", s.max_rate_target_hz * 1e-6) * 1e6;
  s.max_rate_tol_hz = r.positive("max_rate_tol_MHz", s.max_rate_tol_hz * 1e-6) * 1e6;
  s.recovery_target = r.fraction("recovery_target", s.recovery_target);
  s.recovery_tol = r.positive("recovery_tol", s.recovery_tol);
  s.decay_rel_tol = r.positive("decay_rel_tol", s.decay_rel_tol);
  s.pulse_fwhm_s = r.positive("pulse_fwhm_ns", s.pulse_fwhm_s * 1e9) * 1e-9;
  s.jitter_total_s = r.positive("jitter_total_ps", s.jitter_total_s * 1e12) * 1e-12;
  s.jitter_source_s = r.non_negative("jitter_source_ps", s.jitter_source_s * 1e12) * 1e-12;
  s.jitter_target_s = r.positive("jitter_target_ps", s.jitter_target_s * 1e12) * 1e-12;
  s.jitter_tol_s = r.positive("jitter_tol_ps", s.jitter_tol_s * 1e12) * 1e-12;
  s.count_slope_rel_tol = r.positive("count_slope_rel_tol", s.count_slope_rel_tol);
  s.tm_thickness_increase_m = r.number("tm_thickness_increase_nm", s.tm_thickness_increase_m * 1e9) * 1e-9;
  s.tm_alpha_min_per_cm = r.number("tm_alpha_min_per_cm", s.tm_alpha_min_per_cm);
  r.finish();
  return s;
}

}  // namespace

const NamedSweep& ProjectConfig::sweep(const std::string& name) const {
  for (const auto& s : sweeps)
    if (s.name == name) return s;
  throw ConfigError("no sweep named '" + name + "' in the config");
}

ProjectConfig parse_config(const json& doc) {
  Reader root(doc, "");
  const auto version = root.integer("schema_version");
  if (version != config_schema_version)
    root.fail("schema_version", "unsupported version " + std::to_string(version));
  const auto seed = root.integer("seed");
  if (seed < 0) root.fail("seed", "must be >= 0");
  const auto output_dir = root.string("output_dir", "out");
  if (output_dir.empty()) root.fail("output_dir", "must not be empty");

  auto lib = read_materials(root);
  ProjectConfig cfg(read_cross_section(root, std::move(lib)));
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.output_dir = output_dir;
  cfg.resolution = read_resolution(root);
  cfg.solver = read_solver(root);
  read_detector(root, cfg.detector, cfg.pulse_rise_s);
  cfg.experiment = read_experiment(root);
  cfg.sweeps = read_sweeps(root);
  cfg.reproduce = read_reproduce(root);
  root.finish();
  cfg.source = doc;
  cfg.digest = config_digest(doc);
  return cfg;
}

ProjectConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_digest(const json& doc) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << fnv1a64(doc.dump());
  return s.str();
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage) noexcept {
  std::uint64_t x = global_seed ^ fnv1a64(stage);
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace wspd
