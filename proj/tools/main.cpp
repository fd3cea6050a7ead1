// wspd: command-line front end.
//
// Exit codes (stable):
//   0  success
//   1  reproduce-paper ran but at least one check failed
//   2  configuration or usage error
//   3  domain error (input outside a model's validity range)
//   4  convergence failure
//   5  inconsistent measurement inputs
//   70 unexpected internal error

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wspd/config.hpp"
#include "wspd/constants.hpp"
#include "wspd/error.hpp"
#include "wspd/io.hpp"
#include "wspd/reproduce.hpp"
#include "wspd/version.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit : int {
  exit_ok = 0,
  exit_checks_failed = 1,
  exit_config = 2,
  exit_domain = 3,
  exit_convergence = 4,
  exit_inconsistency = 5,
  exit_internal = 70,
};

int exit_code(wspd::ErrorKind k) {
  switch (k) {
    case wspd::ErrorKind::config: return exit_config;
    case wspd::ErrorKind::domain: return exit_domain;
    case wspd::ErrorKind::convergence: return exit_convergence;
    case wspd::ErrorKind::inconsistency: return exit_inconsistency;
  }
  return exit_internal;
}

struct Globals {
  bool json = false;
  std::string output_dir;
};

// Prints either the JSON document or a two-column table of `rows`.
void emit(const Globals& g, const json& doc, const std::vector<std::pair<std::string, std::string>>& rows) {
  if (g.json) {
    std::cout << wspd::to_json_text(doc);
    return;
  }
  std::size_t w = 0;
  for (const auto& [k, v] : rows) w = std::max(w, k.size());
  for (const auto& [k, v] : rows) std::cout << std::left << std::setw(static_cast<int>(w + 2)) << k << v << '\n';
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

// Output sink and manifest for a command; the manifest is written only if
// the command produced files.
struct Outputs {
  wspd::OutputSink sink;
  wspd::RunManifest manifest;

  Outputs(const fs::path& dir, const std::string& digest) : sink(dir, digest), manifest(digest) {}

  void close(wspd::RunManifest::Entry& entry) {
    if (sink.written().empty()) return;
    for (const auto& p : sink.written()) entry.files.push_back(fs::relative(p, sink.dir()).generic_string());
    manifest.finish();
    sink.write_json("manifest.json", manifest.to_json());
  }
};

std::string flags_digest(const json& flags) { return wspd::config_digest(flags); }

wspd::ProjectConfig load(const std::string& path) { return wspd::load_config(path); }

fs::path output_dir_for(const Globals& g, const std::string& configured) {
  return wspd::resolve_output_dir(g.output_dir, configured);
}

// --- solve-mode ----------------------------------------------------------------

struct SolveModeArgs {
  std::string config;
  int mode_index = 0;
  bool dump_fields = false;
};

int cmd_solve_mode(const Globals& g, const SolveModeArgs& a) {
  const auto cfg = load(a.config);
  const auto grid = wspd::rasterize(cfg.cross_section, cfg.resolution);
  const auto op = wspd::assemble_operator(grid, cfg.cross_section.wavelength());
  const auto modes = wspd::solve_modes(op, wspd::default_solver_config(cfg.cross_section, cfg.solver));
  if (modes.empty()) throw wspd::ConvergenceError("no guided mode found near the target index", 0.0);
  if (a.mode_index < 0 || static_cast<std::size_t>(a.mode_index) >= modes.size())
    throw wspd::ConfigError("--mode-index " + std::to_string(a.mode_index) + " out of range: " +
                            std::to_string(modes.size()) + " guided modes found");
  const auto& m = modes[static_cast<std::size_t>(a.mode_index)];
  const double alpha = wspd::modal_absorption_per_cm(m);
  const bool te = m.polarization() == wspd::Polarization::te_like;

  std::vector<std::string> files;
  if (a.dump_fields) {
    Outputs out(output_dir_for(g, cfg.output_dir), cfg.digest);
    auto& entry = out.manifest.add("solve-mode");
    wspd::write_mode_fields(out.sink, "mode" + std::to_string(a.mode_index), m, grid);
    out.close(entry);
    for (const auto& p : out.sink.written()) files.push_back(p.string());
  }

  json doc = {{"mode_index", a.mode_index},
              {"n_eff_re", m.n_eff.real()},
              {"n_eff_im", m.n_eff.imag()},
              {"alpha_per_cm", alpha},
              {"te_fraction", m.te_fraction},
              {"polarization", te ? "te" : "tm"},
              {"guided_modes", modes.size()},
              {"grid_cells", grid.cell_count()},
              {"files", files}};
  emit(g, doc,
       {{"mode", std::to_string(a.mode_index) + " of " + std::to_string(modes.size()) + " guided"},
        {"n_eff", fmt(m.n_eff.real(), 8) + (m.n_eff.imag() >= 0 ? " + " : " - ") + fmt(std::abs(m.n_eff.imag()), 6) + "i"},
        {"alpha [1/cm]", fmt(alpha)},
        {"TE fraction", fmt(m.te_fraction, 4) + (te ? " (TE-like)" : " (TM-like)")},
        {"grid", std::to_string(grid.nx()) + " x " + std::to_string(grid.ny()) + " cells"}});
  return exit_ok;
}

// --- absorptance ------------------------------------------------------------------

int cmd_absorptance(const Globals& g, double alpha, const std::vector<double>& lengths_um) {
  json rows = json::array();
  std::vector<std::pair<std::string, std::string>> table;
  for (double l : lengths_um) {
    const double a = wspd::absorptance(alpha, l * 1e-4);
    rows.push_back({{"length_um", l}, {"absorptance", a}});
    table.emplace_back("A(" + fmt(l) + " um)", fmt(a, 6));
  }
  emit(g, {{"alpha_per_cm", alpha}, {"results", rows}}, table);
  return exit_ok;
}

// --- pulse -------------------------------------------------------------------------

struct PulseArgs {
  double lsq_ph = 90.0;
  int wires = 4;
  double length_um = 50.0;
  double width_nm = 100.0;
  double rload_ohm = 50.0;
  double rise_ps = 200.0;
  std::optional<double> fwhm_ns;
  bool trace = false;
};

int cmd_pulse(const Globals& g, const PulseArgs& a) {
  wspd::DetectorModel m;
  m.sheet_inductance_h = a.lsq_ph * 1e-12;
  m.wire_count = a.wires;
  m.wire_length_m = a.length_um * 1e-6;
  m.wire_width_m = a.width_nm * 1e-9;
  m.load_resistance_ohm = a.rload_ohm;
  const double lkin = wspd::kinetic_inductance(m);
  const double tau = wspd::recovery_time_constant(m);
  const auto trace = wspd::pulse_shape(tau, a.rise_ps * 1e-12, 10.0 * tau);

  json doc = {{"kinetic_inductance_nH", lkin * 1e9},
              {"tau_ns", tau * 1e9},
              {"dead_time_ns", wspd::dead_time(tau) * 1e9},
              {"recovery_at_3tau", wspd::recovery_fraction(3.0 * tau, tau)},
              {"max_count_rate_MHz", wspd::max_count_rate(tau) * 1e-6},
              {"rise_ps", a.rise_ps},
              {"pulse_fwhm_ns", trace.metrics.fwhm_s * 1e9},
              {"pulse_peak_ns", trace.metrics.peak_time_s * 1e9},
              {"tail_decay_ns", trace.metrics.decay_1e_s * 1e9}};
  std::vector<std::pair<std::string, std::string>> rows{
      {"L_kin [nH]", fmt(lkin * 1e9)},
      {"tau [ns]", fmt(tau * 1e9)},
      {"recovery at 3 tau", fmt(wspd::recovery_fraction(3.0 * tau, tau), 4)},
      {"max count rate [MHz]", fmt(wspd::max_count_rate(tau) * 1e-6, 4)},
      {"pulse FWHM [ns]", fmt(trace.metrics.fwhm_s * 1e9, 4)},
      {"tail 1/e decay [ns]", fmt(trace.metrics.decay_1e_s * 1e9, 4)}};
  if (a.fwhm_ns) {
    const double rise = wspd::fit_rise_for_fwhm(tau, *a.fwhm_ns * 1e-9);
    doc["fitted_rise_ps"] = rise * 1e12;
    doc["target_fwhm_ns"] = *a.fwhm_ns;
    rows.emplace_back("rise for target FWHM [ps]", fmt(rise * 1e12, 5));
  }
  std::vector<std::string> files;
  if (a.trace) {
    json flags = {{"lsq_ph_per_sq", a.lsq_ph}, {"wires", a.wires}, {"length_um", a.length_um},
                  {"width_nm", a.width_nm}, {"rload_ohm", a.rload_ohm}, {"rise_ps", a.rise_ps}};
    Outputs out(output_dir_for(g, "out"), flags_digest(flags));
    auto& entry = out.manifest.add("pulse");
    files.push_back(wspd::write_pulse_trace(out.sink, "pulse.csv", trace).string());
    out.close(entry);
    rows.emplace_back("trace", files.back());
  }
  doc["files"] = files;
  emit(g, doc, rows);
  return exit_ok;
}

// --- fp-extract --------------------------------------------------------------------

int cmd_fp_extract(const Globals& g, std::optional<double> tmax, std::optional<double> tmin, double a,
                   const std::string& scan) {
  wspd::FringeData f;
  if (!scan.empty()) {
    if (tmax || tmin) throw wspd::ConfigError("give either --scan-csv or --tmax/--tmin, not both");
    std::ifstream in(scan);
    if (!in) throw wspd::ConfigError("cannot open scan file '" + scan + "'");
    const auto pts = wspd::read_scan_csv(in);
    f = wspd::fringe_extrema(pts, a);
  } else {
    if (!tmax || !tmin) throw wspd::ConfigError("--tmax and --tmin are required without --scan-csv");
    f = {*tmax, *tmin, a};
  }
  const auto r = wspd::extract_coupling(f);
  emit(g,
       {{"t_max", f.t_max}, {"t_min", f.t_min}, {"single_pass", f.single_pass}, {"contrast", r.contrast},
        {"facet_reflectivity", r.facet_reflectivity}, {"mode_match", r.mode_match}, {"coupling", r.coupling}},
       {{"T_max / T_min", fmt(f.t_max) + " / " + fmt(f.t_min)},
        {"contrast K", fmt(r.contrast)},
        {"facet reflectivity", fmt(r.facet_reflectivity, 5)},
        {"mode match", fmt(r.mode_match, 5)},
        {"coupling eta_c", fmt(r.coupling, 5)}});
  return exit_ok;
}

// --- efficiency ----------------------------------------------------------------------

int cmd_efficiency(const Globals& g, double coupling, double a, std::optional<double> internal,
                   std::optional<double> dqe) {
  if (internal.has_value() == dqe.has_value())
    throw wspd::ConfigError("give exactly one of --internal or --dqe");
  const double eta = internal ? *internal : wspd::invert_internal(*dqe, a);
  const auto b = wspd::efficiency_chain(coupling, a, eta);
  emit(g,
       {{"coupling", b.coupling}, {"absorptance", b.absorptance}, {"internal", b.internal}, {"dqe", b.dqe()},
        {"sqe", b.sqe()}},
       {{"coupling", fmt(b.coupling, 5)},
        {"absorptance", fmt(b.absorptance, 5)},
        {"internal", fmt(b.internal, 5)},
        {"DQE", fmt(b.dqe() * 100.0, 4) + " %"},
        {"SQE", fmt(b.sqe() * 100.0, 4) + " %"}});
  return exit_ok;
}

// --- jitter -----------------------------------------------------------------------------

int cmd_jitter(const Globals& g, double total_ps, double source_ps) {
  const double j = wspd::jitter_deconvolve(total_ps * 1e-12, source_ps * 1e-12) * 1e12;
  emit(g, {{"total_ps", total_ps}, {"source_ps", source_ps}, {"intrinsic_ps", j}},
       {{"intrinsic jitter [ps]", fmt(j, 4)}});
  return exit_ok;
}

// --- counts -------------------------------------------------------------------------------

struct CountsArgs {
  std::string config;
  std::vector<double> powers_pw;
  std::optional<double> duration_s;
  std::optional<std::uint64_t> seed;
  double coupling = 0.174;
  double absorptance = 0.90;
  std::optional<double> internal;
};

int cmd_counts(const Globals& g, const CountsArgs& a) {
  const auto cfg = load(a.config);
  const auto& ex = cfg.experiment;
  const double eta = a.internal ? *a.internal : cfg.detector.internal.at(cfg.detector.normalized_bias());
  const auto budget = wspd::efficiency_chain(a.coupling, a.absorptance, eta);
  const auto powers = a.powers_pw.empty() ? ex.powers_w : [&] {
    std::vector<double> p;
    for (double v : a.powers_pw) p.push_back(v * 1e-12);
    return p;
  }();
  const double duration = a.duration_s.value_or(ex.duration_s);
  const std::uint64_t seed = a.seed.value_or(wspd::derive_seed(cfg.seed, "counts"));

  wspd::SourceSpec src;
  src.wavelength_m = ex.wavelength_m;
  src.jitter_sigma_s = ex.jitter_sigma_s;
  src.dead_time_s = ex.dead_time_s;
  src.dark_rate_per_s = ex.dark_rate_per_s;
  const double dead = ex.dead_time_s.value_or(wspd::dead_time(wspd::recovery_time_constant(cfg.detector)));
  const double dark = ex.dark_rate_per_s.value_or(wspd::dark_count_rate(cfg.detector));

  Outputs out(output_dir_for(g, cfg.output_dir), cfg.digest);
  auto& entry = out.manifest.add("counts");
  entry.seeds["counts"] = seed;
  json rows = json::array();
  std::vector<std::pair<std::string, std::string>> table;
  std::vector<double> rates;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    src.power_w = powers[i];
    const auto rec = wspd::simulate_counting(cfg.detector, budget, src, duration, seed + i);
    wspd::write_count_record(out.sink, "counts_" + std::to_string(i), rec);
    const double expected = wspd::expected_count_rate(powers[i], ex.wavelength_m, budget.sqe(), dead, dark);
    rows.push_back({{"power_W", powers[i]}, {"events", rec.events.size()}, {"rate_per_s", rec.rate()},
                    {"expected_rate_per_s", expected}, {"seed", seed + i}});
    table.emplace_back("P = " + fmt(powers[i] * 1e12, 4) + " pW",
                       fmt(rec.rate(), 6) + " /s (expected " + fmt(expected, 6) + ")");
    rates.push_back(rec.rate() / (1.0 - rec.rate() * dead) - dark);
  }
  json doc = {{"sqe", budget.sqe()}, {"dead_time_s", dead}, {"dark_rate_per_s", dark},
              {"duration_s", duration}, {"points", rows}};
  if (powers.size() >= 2) {
    const auto fit = wspd::fit_rate_vs_power(powers, rates);
    const double est = fit.slope * wspd::constants::photon_energy(ex.wavelength_m);
    doc["sqe_from_slope"] = est;
    table.emplace_back("SQE from slope", fmt(est * 100.0, 5) + " % (input " + fmt(budget.sqe() * 100.0, 5) + " %)");
  }
  out.sink.write_text("count_rate_vs_power.csv", [&](std::ostream& os) {
    os << "power_W,events,rate_per_s,expected_rate_per_s\n" << std::setprecision(10);
    for (const auto& r : rows)
      os << r["power_W"].get<double>() << ',' << r["events"].get<std::size_t>() << ','
         << r["rate_per_s"].get<double>() << ',' << r["expected_rate_per_s"].get<double>() << '\n';
  });
  out.close(entry);
  emit(g, doc, table);
  return exit_ok;
}

// --- sweep / optimize ---------------------------------------------------------------------

int cmd_sweep(const Globals& g, const std::string& config, const std::string& name) {
  const auto cfg = load(config);
  const auto& s = cfg.sweep(name);
  const auto result = wspd::run_sweep(cfg.cross_section, s.spec, cfg.resolution, cfg.solver);

  Outputs out(output_dir_for(g, cfg.output_dir), cfg.digest);
  auto& entry = out.manifest.add("sweep " + name);
  const auto file = out.sink.write_text("sweep_" + name + ".csv", [&](std::ostream& os) { result.write_csv(os); });
  out.close(entry);

  json rows = json::array();
  std::vector<std::pair<std::string, std::string>> table;
  for (const auto& r : result.rows) {
    json params = json::object();
    std::string label;
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      const auto pname = std::string(wspd::to_string(result.parameters[k]));
      const bool count = result.parameters[k] == wspd::SweepParameter::wire_count;
      params[count ? pname : pname + "_nm"] = count ? r.values[k] : r.values[k] * 1e9;
      label += (label.empty() ? "" : ", ") + pname + "=" + fmt(count ? r.values[k] : r.values[k] * 1e9);
    }
    rows.push_back({{"parameters", params}, {"ok", r.eval.ok}, {"alpha_per_cm", r.eval.alpha_per_cm},
                    {"n_eff_re", r.eval.n_eff.real()}, {"n_eff_im", r.eval.n_eff.imag()},
                    {"te_fraction", r.eval.te_fraction}, {"margin_um", r.eval.margin_m * 1e6},
                    {"feasible", r.feasible}, {"status", r.eval.ok ? "ok" : r.eval.status}});
    table.emplace_back(label, r.eval.ok ? "alpha=" + fmt(r.eval.alpha_per_cm) + " /cm, margin=" +
                                              fmt(r.eval.margin_m * 1e6, 4) + " um" + (r.feasible ? "" : " (infeasible)")
                                        : "failed: " + r.eval.status);
  }
  json doc = {{"sweep", name}, {"rows", rows}, {"file", file.string()}};
  doc["best_index"] = result.best ? json(*result.best) : json(nullptr);
  table.emplace_back("written", file.string());
  emit(g, doc, table);
  return exit_ok;
}

int cmd_optimize(const Globals& g, const std::string& config, const std::string& name,
                 std::optional<double> tolerance_nm) {
  const auto cfg = load(config);
  const auto& s = cfg.sweep(name);
  const double tol = tolerance_nm ? *tolerance_nm * 1e-9 : s.tolerance_m;
  const auto r = wspd::maximize_alpha(cfg.cross_section, s.spec, cfg.resolution, cfg.solver, tol);

  Outputs out(output_dir_for(g, cfg.output_dir), cfg.digest);
  auto& entry = out.manifest.add("optimize " + name);
  const auto file = out.sink.write_text("optimize_" + name + "_trace.csv", [&](std::ostream& os) {
    wspd::SweepResult tmp;
    tmp.parameters = r.parameters;
    os << "phase,step,";
    std::ostringstream body;
    for (const auto& t : r.trace) tmp.rows.push_back(t.row);
    tmp.write_csv(body);
    // Prefix each data row with its phase and step.
    std::istringstream lines(body.str());
    std::string line;
    std::getline(lines, line);
    os << line << '\n' << std::setprecision(12);
    for (std::size_t i = 0; std::getline(lines, line); ++i)
      os << r.trace[i].phase << ',' << r.trace[i].step * 1e9 << ',' << line << '\n';
  });
  out.close(entry);

  json best = json::object();
  std::vector<std::pair<std::string, std::string>> table{{"status", r.feasible ? "ok" : "infeasible: " + r.message}};
  for (std::size_t k = 0; k < r.best_values.size(); ++k) {
    const auto pname = std::string(wspd::to_string(r.parameters[k]));
    const bool count = r.parameters[k] == wspd::SweepParameter::wire_count;
    best[count ? pname : pname + "_nm"] = count ? r.best_values[k] : r.best_values[k] * 1e9;
    table.emplace_back(pname, fmt(count ? r.best_values[k] : r.best_values[k] * 1e9, 6));
  }
  if (r.feasible) {
    table.emplace_back("alpha [1/cm]", fmt(r.best.alpha_per_cm));
    table.emplace_back("margin [um]", fmt(r.best.margin_m * 1e6, 4));
  }
  table.emplace_back("evaluations", std::to_string(r.trace.size()));
  table.emplace_back("trace", file.string());
  emit(g,
       {{"feasible", r.feasible}, {"message", r.message}, {"best", best},
        {"alpha_per_cm", r.feasible ? json(r.best.alpha_per_cm) : json(nullptr)},
        {"margin_um", r.feasible ? json(r.best.margin_m * 1e6) : json(nullptr)},
        {"evaluations", r.trace.size()}, {"trace_file", file.string()}},
       table);
  return exit_ok;
}

// --- reproduce-paper -------------------------------------------------------------------------

int cmd_reproduce(const Globals& g, const std::string& config, const std::vector<std::string>& skip_list) {
  const auto cfg = load(config);
  std::set<std::string> skip;
  for (const auto& s : skip_list) {
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) skip.insert(item);
  }
  Outputs out(output_dir_for(g, cfg.output_dir), cfg.digest);
  const auto report = wspd::reproduce_paper(cfg, out.sink, skip, [&](const std::string& stage) {
    if (!g.json) std::cerr << "[wspd] " << stage << "...\n";
  });
  for (const auto& st : report.stages) {
    auto& e = out.manifest.add(st.name);
    e.status = st.status;
    e.message = st.message;
    e.files = st.files;
    e.seeds = st.seeds;
  }
  out.sink.write_text("summary.csv", [&](std::ostream& os) { report.write_csv(os); });
  out.sink.write_json("summary.json", report.to_json());
  auto& tail = out.manifest.add("reproduce-paper");
  tail.status = report.all_pass() ? "ok" : "checks-failed";
  tail.files = {"summary.csv", "summary.json"};
  out.manifest.finish();
  out.sink.write_json("manifest.json", out.manifest.to_json());

  if (g.json) {
    json doc = report.to_json();
    doc["output_dir"] = out.sink.dir().string();
    std::cout << wspd::to_json_text(doc);
  } else {
    report.write_table(std::cout);
    for (const auto& st : report.stages)
      if (st.status != "ok")
        std::cout << "stage " << st.name << ": " << st.status << (st.message.empty() ? "" : " (" + st.message + ")")
                  << '\n';
    std::cout << (report.all_pass() ? "all checks passed" : "some checks did not pass") << "; outputs in "
              << out.sink.dir().string() << '\n';
  }
  return report.all_pass() ? exit_ok : exit_checks_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wspd: waveguide single-photon detector modeling toolkit"};
  app.set_version_flag("--version", std::string("wspd ") + WSPD_VERSION);
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON on standard output");
  app.add_option("--output-dir", g.output_dir,
                 std::string("Output directory (overrides $") + wspd::output_dir_env + " and the config)");

  std::function<int()> run;

  SolveModeArgs sm;
  auto* solve = app.add_subcommand("solve-mode", "Solve the guided modes of the configured cross-section");
  solve->add_option("--config", sm.config, "Project config (JSON)")->required()->check(CLI::ExistingFile);
  solve->add_option("--mode-index", sm.mode_index, "Index into the guided modes, by descending Re(n_eff)");
  solve->add_flag("--dump-fields", sm.dump_fields, "Write field and permittivity matrices");
  solve->callback([&] { run = [&] { return cmd_solve_mode(g, sm); }; });

  double abs_alpha = 0.0;
  std::vector<double> abs_lengths;
  auto* absn = app.add_subcommand("absorptance", "Beer-Lambert absorptance 1 - exp(-alpha L)");
  absn->add_option("--alpha-per-cm", abs_alpha, "Modal absorption coefficient [1/cm]")->required();
  absn->add_option("--length-um", abs_lengths, "Propagation length(s) [um]")->required();
  absn->callback([&] { run = [&] { return cmd_absorptance(g, abs_alpha, abs_lengths); }; });

  PulseArgs pa;
  auto* pulse = app.add_subcommand("pulse", "Kinetic inductance, recovery time, pulse shape and count-rate limit");
  pulse->add_option("--lsq-ph-per-sq", pa.lsq_ph, "Sheet kinetic inductance [pH/sq]")->capture_default_str();
  pulse->add_option("--wires", pa.wires, "Number of wires in series")->capture_default_str();
  pulse->add_option("--length-um", pa.length_um, "Length of each wire [um]")->capture_default_str();
  pulse->add_option("--width-nm", pa.width_nm, "Wire width [nm]")->capture_default_str();
  pulse->add_option("--rload-ohm", pa.rload_ohm, "Load resistance [ohm]")->capture_default_str();
  pulse->add_option("--rise-ps", pa.rise_ps, "Pulse rise constant [ps]")->capture_default_str();
  pulse->add_option("--fwhm-ns", pa.fwhm_ns, "Fit the rise constant to this pulse FWHM [ns]");
  pulse->add_flag("--trace", pa.trace, "Write the pulse trace as CSV");
  pulse->callback([&] { run = [&] { return cmd_pulse(g, pa); }; });

  std::optional<double> tmax, tmin;
  double single_pass = 1.0;
  std::string scan;
  auto* fp = app.add_subcommand("fp-extract", "Coupling efficiency from Fabry-Perot fringe extrema");
  fp->add_option("--tmax", tmax, "Maximum fringe transmission (fraction)");
  fp->add_option("--tmin", tmin, "Minimum fringe transmission (fraction)");
  fp->add_option("--single-pass", single_pass, "Single-pass propagation transmission a")->capture_default_str();
  fp->add_option("--scan-csv", scan, "Fringe scan CSV (wavelength_nm,transmission)")->check(CLI::ExistingFile);
  fp->callback([&] { run = [&] { return cmd_fp_extract(g, tmax, tmin, single_pass, scan); }; });

  double eff_c = 0.0, eff_a = 0.0;
  std::optional<double> eff_int, eff_dqe;
  auto* eff = app.add_subcommand("efficiency", "SQE/DQE efficiency chain");
  eff->add_option("--coupling", eff_c, "Fiber-to-waveguide coupling efficiency")->required();
  eff->add_option("--absorptance", eff_a, "Absorptance of the wire section")->required();
  eff->add_option("--internal", eff_int, "Internal detection efficiency");
  eff->add_option("--dqe", eff_dqe, "Measured DQE; the internal efficiency is inferred");
  eff->callback([&] { run = [&] { return cmd_efficiency(g, eff_c, eff_a, eff_int, eff_dqe); }; });

  double j_total = 0.0, j_source = 0.0;
  auto* jit = app.add_subcommand("jitter", "Intrinsic jitter by quadrature deconvolution");
  jit->add_option("--total-ps", j_total, "Measured total jitter [ps]")->required();
  jit->add_option("--source-ps", j_source, "Source jitter [ps]")->required();
  jit->callback([&] { run = [&] { return cmd_jitter(g, j_total, j_source); }; });

  CountsArgs ca;
  auto* counts = app.add_subcommand("counts", "Monte Carlo photon-counting experiment");
  counts->add_option("--config", ca.config, "Project config (JSON)")->required()->check(CLI::ExistingFile);
  counts->add_option("--power-pw", ca.powers_pw, "Optical power(s) at the fiber input [pW]");
  counts->add_option("--duration-s", ca.duration_s, "Acquisition time per power [s]");
  counts->add_option("--seed", ca.seed, "Seed (default: derived from the config seed)");
  counts->add_option("--coupling", ca.coupling, "Coupling efficiency")->capture_default_str();
  counts->add_option("--absorptance", ca.absorptance, "Absorptance")->capture_default_str();
  counts->add_option("--internal", ca.internal, "Internal efficiency (default: logistic model at the bias)");
  counts->callback([&] { run = [&] { return cmd_counts(g, ca); }; });

  std::string sw_config, sw_name;
  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from the config");
  sweep->add_option("--config", sw_config, "Project config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--name", sw_name, "Sweep name in the config")->required();
  sweep->callback([&] { run = [&] { return cmd_sweep(g, sw_config, sw_name); }; });

  std::string op_config, op_name;
  std::optional<double> op_tol;
  auto* opt = app.add_subcommand("optimize", "Maximize modal absorption over 1 or 2 sweep parameters");
  opt->add_option("--config", op_config, "Project config (JSON)")->required()->check(CLI::ExistingFile);
  opt->add_option("--name", op_name, "Sweep name in the config")->required();
  opt->add_option("--tolerance-nm", op_tol, "Refinement tolerance [nm]");
  opt->callback([&] { run = [&] { return cmd_optimize(g, op_config, op_name, op_tol); }; });

  std::string rp_config = WSPD_DEFAULT_CONFIG;
  std::vector<std::string> rp_skip;
  auto* rp = app.add_subcommand("reproduce-paper", "Run every paper-anchored check end to end");
  rp->add_option("--config", rp_config, "Project config (JSON)")->capture_default_str()->check(CLI::ExistingFile);
  rp->add_option("--skip", rp_skip, "Stages to skip (comma separated): mode-solver, absorptance, fp-coupling, "
                                    "efficiency, pulse, jitter, counting, tm-design");
  rp->callback([&] { run = [&] { return cmd_reproduce(g, rp_config, rp_skip); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }

  try {
    return run();
  } catch (const wspd::Error& e) {
    std::cerr << "wspd: " << wspd::to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "wspd: internal error: " << e.what() << '\n';
    return exit_internal;
  }
}
