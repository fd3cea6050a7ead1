#include "wspd/reproduce.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include "wspd/constants.hpp"
#include "wspd/error.hpp"

namespace wspd {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Check band_check(std::string stage, std::string name, double value, double lower, double upper, std::string unit) {
  Check c{std::move(stage), std::move(name), value, lower, upper, std::move(unit), CheckStatus::fail, ""};
  c.status = std::isfinite(value) && value >= lower && value <= upper ? CheckStatus::pass : CheckStatus::fail;
  return c;
}

Check around(std::string stage, std::string name, double value, double target, double tol, std::string unit) {
  return band_check(std::move(stage), std::move(name), value, target - tol, target + tol, std::move(unit));
}

Check not_run(std::string stage, std::string name, double lower, double upper, std::string unit, std::string why) {
  return {std::move(stage), std::move(name), std::nan(""), lower, upper, std::move(unit), CheckStatus::not_run,
          std::move(why)};
}

std::string rel(const OutputSink& sink, const std::filesystem::path& p) {
  return std::filesystem::relative(p, sink.dir()).generic_string();
}

struct ModeOutcome {
  double alpha_per_cm = 0.0;
  Complex n_eff;
};

}  // namespace

const char* to_string(CheckStatus s) noexcept {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::not_run: return "NOT-RUN";
  }
  return "?";
}

const std::vector<std::string>& reproduce_stages() {
  static const std::vector<std::string> names{"mode-solver", "absorptance", "fp-coupling", "efficiency",
                                              "pulse",       "jitter",      "counting",    "tm-design"};
  return names;
}

bool ReproduceReport::all_pass() const {
  for (const auto& s : stages)
    if (s.status == "failed") return false;
  for (const auto& c : checks)
    if (c.status != CheckStatus::pass) return false;
  return !checks.empty();
}

json ReproduceReport::to_json() const {
  json doc;
  doc["all_pass"] = all_pass();
  doc["stages"] = json::array();
  for (const auto& s : stages) {
    json seeds = json::object();
    for (const auto& [k, v] : s.seeds) seeds[k] = v;
    json values = json::object();
    for (const auto& [k, v] : s.values) values[k] = v;
    doc["stages"].push_back({{"name", s.name}, {"status", s.status}, {"message", s.message},
                             {"seconds", s.seconds}, {"files", s.files}, {"seeds", seeds}, {"values", values}});
  }
  doc["checks"] = json::array();
  for (const auto& c : checks) {
    json value = std::isfinite(c.value) ? json(c.value) : json(nullptr);
    doc["checks"].push_back({{"stage", c.stage}, {"name", c.name}, {"value", value}, {"lower", c.lower},
                             {"upper", c.upper}, {"unit", c.unit}, {"status", to_string(c.status)},
                             {"note", c.note}});
  }
  return doc;
}

void ReproduceReport::write_table(std::ostream& out) const {
  std::ostringstream s;
  s << std::left << std::setw(13) << "stage" << std::setw(24) << "check" << std::right << std::setw(14) << "value"
    << std::setw(28) << "band" << "  " << std::left << std::setw(8) << "unit" << "status\n";
  for (const auto& c : checks) {
    std::ostringstream band, value;
    band << std::setprecision(6) << '[' << c.lower << ", " << c.upper << ']';
    if (std::isfinite(c.value))
      value << std::setprecision(6) << c.value;
    else
      value << "-";
    s << std::left << std::setw(13) << c.stage << std::setw(24) << c.name << std::right << std::setw(14)
      << value.str() << std::setw(28) << band.str() << "  " << std::left << std::setw(8) << c.unit
      << to_string(c.status);
    if (!c.note.empty()) s << "  (" << c.note << ')';
    s << '\n';
  }
  out << s.str();
}

void ReproduceReport::write_csv(std::ostream& out) const {
  out << "stage,check,value,lower,upper,unit,status\n" << std::setprecision(12);
  for (const auto& c : checks) {
    out << c.stage << ',' << c.name << ',';
    if (std::isfinite(c.value)) out << c.value;
    out << ',' << c.lower << ',' << c.upper << ',' << c.unit << ',' << to_string(c.status) << '\n';
  }
}

ReproduceReport reproduce_paper(const ProjectConfig& cfg, OutputSink& sink, const std::set<std::string>& skip,
                                const std::function<void(const std::string&)>& progress) {
  for (const auto& s : skip) {
    bool known = false;
    for (const auto& n : reproduce_stages()) known = known || n == s;
    if (!known) throw ConfigError("unknown stage '" + s + "' in --skip");
  }

  const auto& rp = cfg.reproduce;
  ReproduceReport report;
  std::optional<ModeOutcome> te;
  std::optional<CouplingResult> coupling;

  // Runs `body` as stage `name`, recording timing, files and failure.
  auto stage = [&](const std::string& name, const std::function<void(StageResult&)>& body) -> bool {
    StageResult st;
    st.name = name;
    if (skip.count(name)) {
      st.status = "skipped";
      report.stages.push_back(std::move(st));
      return false;
    }
    if (progress) progress(name);
    const auto before = sink.written().size();
    const auto t0 = Clock::now();
    try {
      body(st);
    } catch (const std::exception& e) {
      st.status = "failed";
      st.message = e.what();
    }
    st.seconds = seconds_since(t0);
    for (auto i = before; i < sink.written().size(); ++i) st.files.push_back(rel(sink, sink.written()[i]));
    const bool ok = st.status == "ok";
    report.stages.push_back(std::move(st));
    return ok;
  };
  auto why_missing = [&](const std::string& name) {
    for (const auto& s : report.stages)
      if (s.name == name) return s.status == "skipped" ? name + " skipped" : name + " failed";
    return name + " not run";
  };

  const double alpha_lo = rp.alpha_reference_per_cm * (1.0 - rp.alpha_rel_tol);
  const double alpha_hi = rp.alpha_reference_per_cm * (1.0 + rp.alpha_rel_tol);

  // -- mode solver ------------------------------------------------------------
  {
    double seconds = 0.0;
    stage("mode-solver", [&](StageResult& st) {
      const auto t0 = Clock::now();
      const auto grid = rasterize(cfg.cross_section, cfg.resolution);
      const auto op = assemble_operator(grid, cfg.cross_section.wavelength());
      const auto modes = solve_modes(op, default_solver_config(cfg.cross_section, cfg.solver));
      seconds = seconds_since(t0);
      const auto mode = select_mode(modes, ModeSelector::fundamental_te);
      sink.write_text("modes.csv", [&](std::ostream& out) {
        out << "index,n_eff_re,n_eff_im,alpha_per_cm,te_fraction,polarization\n" << std::setprecision(12);
        for (std::size_t i = 0; i < modes.size(); ++i)
          out << i << ',' << modes[i].n_eff.real() << ',' << modes[i].n_eff.imag() << ','
              << modal_absorption_per_cm(modes[i]) << ',' << modes[i].te_fraction << ','
              << (modes[i].polarization() == Polarization::te_like ? "te" : "tm") << '\n';
      });
      if (!mode) throw ConvergenceError("no guided TE-like mode found", 0.0);
      write_mode_fields(sink, "te0_fields", *mode, grid);
      te = ModeOutcome{modal_absorption_per_cm(*mode), mode->n_eff};
      st.values["n_eff_re"] = mode->n_eff.real();
      st.values["n_eff_im"] = mode->n_eff.imag();
      st.values["alpha_per_cm"] = te->alpha_per_cm;
      st.values["te_fraction"] = mode->te_fraction;
      st.values["cells"] = static_cast<double>(grid.cell_count());
      st.values["solve_seconds"] = seconds;
    });
    if (te) {
      report.checks.push_back(band_check("mode-solver", "alpha_te", te->alpha_per_cm, alpha_lo, alpha_hi, "1/cm"));
      report.checks.push_back(band_check("mode-solver", "solve_runtime", seconds, 0.0, rp.max_solve_seconds, "s"));
    } else {
      const auto why = why_missing("mode-solver");
      report.checks.push_back(not_run("mode-solver", "alpha_te", alpha_lo, alpha_hi, "1/cm", why));
      report.checks.push_back(not_run("mode-solver", "solve_runtime", 0.0, rp.max_solve_seconds, "s", why));
    }
  }

  // -- absorptance --------------------------------------------------------------
  std::optional<double> model_absorptance;  // at the first configured length
  stage("absorptance", [&](StageResult& st) {
    const auto n = rp.absorptance_lengths_m.size();
    for (std::size_t i = 0; i < n; ++i) {
      const double l_cm = rp.absorptance_lengths_m[i] * 100.0;
      const auto tag = std::to_string(static_cast<int>(std::lround(rp.absorptance_lengths_m[i] * 1e6))) + "um";
      report.checks.push_back(around("absorptance", "absorptance_" + tag,
                                     absorptance(rp.alpha_reference_per_cm, l_cm), rp.absorptance_targets[i],
                                     rp.absorptance_tols[i], ""));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto tag = std::to_string(static_cast<int>(std::lround(rp.absorptance_lengths_m[i] * 1e6))) + "um";
      const double lo = rp.absorptance_targets[i] - rp.absorptance_tols[i];
      const double hi = rp.absorptance_targets[i] + rp.absorptance_tols[i];
      if (!te) {
        report.checks.push_back(not_run("absorptance", "model_absorptance_" + tag, lo, hi, "", why_missing("mode-solver")));
        continue;
      }
      const double a = absorptance(te->alpha_per_cm, rp.absorptance_lengths_m[i] * 100.0);
      if (i == 0) model_absorptance = a;
      report.checks.push_back(band_check("absorptance", "model_absorptance_" + tag, a, lo, hi, ""));
    }
    sink.write_text("absorptance_vs_length.csv", [&](std::ostream& out) {
      out << "length_um,absorptance_reference" << (te ? ",absorptance_model" : "") << '\n' << std::setprecision(10);
      for (int k = 0; k <= 200; ++k) {
        out << k << ',' << absorptance(rp.alpha_reference_per_cm, k * 1e-4);
        if (te) out << ',' << absorptance(te->alpha_per_cm, k * 1e-4);
        out << '\n';
      }
    });
    st.values["alpha_reference_per_cm"] = rp.alpha_reference_per_cm;
  });

  // -- Fabry-Perot --------------------------------------------------------------
  stage("fp-coupling", [&](StageResult& st) {
    try {
      coupling = extract_coupling(rp.fringes);
    } catch (...) {
      report.checks.push_back(not_run("fp-coupling", "coupling_efficiency", rp.coupling_target - rp.coupling_tol,
                                      rp.coupling_target + rp.coupling_tol, "", "extraction failed"));
      throw;
    }
    report.checks.push_back(around("fp-coupling", "coupling_efficiency", coupling->coupling, rp.coupling_target,
                                   rp.coupling_tol, ""));
    st.values["facet_reflectivity"] = coupling->facet_reflectivity;
    st.values["mode_match"] = coupling->mode_match;
    st.values["contrast"] = coupling->contrast;
    if (te) st.values["fresnel_reflectivity_model"] = fresnel_reflectivity(te->n_eff);
    sink.write_text("fp_fringes.csv", [&](std::ostream& out) {
      out << "phase_rad,transmission\n" << std::setprecision(10);
      for (int k = 0; k <= 720; ++k) {
        const double phi = 4.0 * constants::pi * k / 720.0;
        out << phi << ','
            << fp_transmission(coupling->facet_reflectivity, coupling->mode_match, rp.fringes.single_pass, phi)
            << '\n';
      }
    });
  });

  // -- efficiency chain -----------------------------------------------------------
  stage("efficiency", [&](StageResult& st) {
    const double eta_int = invert_internal(rp.dqe_measured, rp.chain_absorptance);
    const auto chain = efficiency_chain(rp.coupling_target, rp.chain_absorptance, eta_int);
    report.checks.push_back(around("efficiency", "sqe_chain", chain.sqe(), rp.sqe_target, rp.sqe_tol, ""));
    st.values["internal_efficiency"] = eta_int;
    st.values["dqe"] = chain.dqe();
    st.values["sqe"] = chain.sqe();
    const double lo = rp.sqe_target - rp.sqe_tol, hi = rp.sqe_target + rp.sqe_tol;
    if (!model_absorptance || !coupling) {
      const auto why = !model_absorptance ? why_missing(te ? "absorptance" : "mode-solver") : why_missing("fp-coupling");
      report.checks.push_back(not_run("efficiency", "sqe_model", lo, hi, "", why));
      return;
    }
    const auto model = efficiency_chain(coupling->coupling, *model_absorptance, eta_int);
    report.checks.push_back(band_check("efficiency", "sqe_model", model.sqe(), lo, hi, ""));
    st.values["sqe_model"] = model.sqe();
  });

  // -- pulse and recovery -----------------------------------------------------------
  stage("pulse", [&](StageResult& st) {
    const double tau = recovery_time_constant(cfg.detector);
    report.checks.push_back(around("pulse", "tau", tau * 1e9, rp.tau_target_s * 1e9, rp.tau_target_s * 1e9 * 1e-9, "ns"));
    report.checks.push_back(around("pulse", "recovery_3tau", recovery_fraction(3.0 * tau, tau), rp.recovery_target,
                                   rp.recovery_tol, ""));
    report.checks.push_back(around("pulse", "max_count_rate", max_count_rate(tau) * 1e-6, rp.max_rate_target_hz * 1e-6,
                                   rp.max_rate_tol_hz * 1e-6, "MHz"));
    const auto trace = pulse_shape(tau, cfg.pulse_rise_s, 10.0 * tau);
    report.checks.push_back(around("pulse", "tail_decay", trace.metrics.decay_1e_s * 1e9, tau * 1e9,
                                   tau * 1e9 * rp.decay_rel_tol, "ns"));
    write_pulse_trace(sink, "pulse.csv", trace);
    st.values["kinetic_inductance_nH"] = kinetic_inductance(cfg.detector) * 1e9;
    st.values["fwhm_ns"] = trace.metrics.fwhm_s * 1e9;
    st.values["peak_time_ns"] = trace.metrics.peak_time_s * 1e9;
    st.values["rise_for_measured_fwhm_ps"] = fit_rise_for_fwhm(tau, rp.pulse_fwhm_s) * 1e12;
  });

  // -- jitter -------------------------------------------------------------------------
  stage("jitter", [&](StageResult& st) {
    const double j = jitter_deconvolve(rp.jitter_total_s, rp.jitter_source_s);
    report.checks.push_back(around("jitter", "intrinsic_jitter", j * 1e12, rp.jitter_target_s * 1e12,
                                   rp.jitter_tol_s * 1e12, "ps"));
    // Synthetic timing histogram at the stated total jitter (FWHM).
    const auto seed = derive_seed(cfg.seed, "jitter");
    st.seeds["jitter"] = seed;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, rp.jitter_total_s / gaussian_fwhm_per_sigma);
    std::vector<double> samples(20000);
    for (auto& s : samples) s = g(rng);
    const double fwhm = histogram_fwhm(samples, 80);
    st.values["intrinsic_ps"] = j * 1e12;
    st.values["histogram_total_fwhm_ps"] = fwhm * 1e12;
    st.values["histogram_intrinsic_ps"] = jitter_deconvolve(fwhm, rp.jitter_source_s) * 1e12;
    sink.write_text("jitter_samples.csv", [&](std::ostream& out) {
      out << "delay_ps\n" << std::setprecision(8);
      for (double s : samples) out << s * 1e12 << '\n';
    });
  });

  // -- counting ---------------------------------------------------------------------------
  stage("counting", [&](StageResult& st) {
    const auto& ex = cfg.experiment;
    const double eta_int = invert_internal(rp.dqe_measured, rp.chain_absorptance);
    const auto budget = efficiency_chain(rp.coupling_target, rp.chain_absorptance, eta_int);
    SourceSpec src;
    src.wavelength_m = ex.wavelength_m;
    src.jitter_sigma_s = ex.jitter_sigma_s;
    src.dead_time_s = ex.dead_time_s;
    src.dark_rate_per_s = ex.dark_rate_per_s;
    const double dead = ex.dead_time_s.value_or(dead_time(recovery_time_constant(cfg.detector)));
    const double dark = ex.dark_rate_per_s.value_or(dark_count_rate(cfg.detector));

    std::vector<double> powers, rates;
    std::vector<std::size_t> counts;
    const auto base_seed = derive_seed(cfg.seed, "counting");
    st.seeds["counting"] = base_seed;
    for (std::size_t i = 0; i < ex.powers_w.size(); ++i) {
      src.power_w = ex.powers_w[i];
      const auto rec = simulate_counting(cfg.detector, budget, src, ex.duration_s, base_seed + i);
      const double r = rec.rate();
      powers.push_back(ex.powers_w[i]);
      rates.push_back(r / (1.0 - r * dead) - dark);  // undo the dead time, remove dark counts
      counts.push_back(rec.events.size());
      if (i == 0) write_count_record(sink, "counts_lowest_power", rec);
    }
    const auto fit = fit_rate_vs_power(powers, rates);
    const double sqe_est = fit.slope * constants::photon_energy(ex.wavelength_m);
    report.checks.push_back(band_check("counting", "sqe_from_slope", sqe_est,
                                       budget.sqe() * (1.0 - rp.count_slope_rel_tol),
                                       budget.sqe() * (1.0 + rp.count_slope_rel_tol), ""));
    st.values["sqe_input"] = budget.sqe();
    st.values["sqe_estimate"] = sqe_est;
    st.values["dark_rate_per_s"] = dark;
    sink.write_text("count_rate_vs_power.csv", [&](std::ostream& out) {
      out << "power_W,counts,rate_per_s,expected_rate_per_s\n" << std::setprecision(10);
      for (std::size_t i = 0; i < powers.size(); ++i)
        out << powers[i] << ',' << counts[i] << ',' << static_cast<double>(counts[i]) / ex.duration_s << ','
            << expected_count_rate(powers[i], ex.wavelength_m, budget.sqe(), dead, dark) << '\n';
    });
  });

  // -- TM design -----------------------------------------------------------------------
  {
    std::optional<double> tm_alpha;
    stage("tm-design", [&](StageResult& st) {
      const auto& base = cfg.cross_section;
      const double t = base.stack().core().thickness_m + rp.tm_thickness_increase_m;
      const auto cs = apply_parameters(base, {SweepParameter::gaas_thickness}, {t});
      const auto modes = solve_cross_section(cs, cfg.resolution, cfg.solver);
      const auto mode = select_mode(modes, ModeSelector::first_tm);
      if (!mode) throw ConvergenceError("no guided TM-like mode found", 0.0);
      tm_alpha = modal_absorption_per_cm(*mode);
      st.values["core_thickness_nm"] = t * 1e9;
      st.values["n_eff_re"] = mode->n_eff.real();
      st.values["n_eff_im"] = mode->n_eff.imag();
      st.values["alpha_per_cm"] = *tm_alpha;
      st.values["te_fraction"] = mode->te_fraction;
    });
    const double inf = std::numeric_limits<double>::infinity();
    if (tm_alpha)
      report.checks.push_back(band_check("tm-design", "alpha_tm", *tm_alpha, rp.tm_alpha_min_per_cm, inf, "1/cm"));
    else
      report.checks.push_back(not_run("tm-design", "alpha_tm", rp.tm_alpha_min_per_cm, inf, "1/cm", why_missing("tm-design")));
  }

  return report;
}

}  // namespace wspd
