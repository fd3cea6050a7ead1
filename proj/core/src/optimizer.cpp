#include "wspd/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <thread>

#include "wspd/error.hpp"

namespace wspd {

namespace {

struct ParameterInfo {
  SweepParameter p;
  std::string_view name;
  std::string_view unit;  // CSV column suffix
  double scale;           // SI value per unit
};

constexpr ParameterInfo parameter_table[] = {
    {SweepParameter::gaas_thickness, "gaas_thickness", "nm", 1e-9},
    {SweepParameter::ridge_width, "ridge_width", "nm", 1e-9},
    {SweepParameter::etch_depth, "etch_depth", "nm", 1e-9},
    {SweepParameter::wire_count, "wire_count", "", 1.0},
    {SweepParameter::array_offset, "array_offset", "nm", 1e-9},
    {SweepParameter::wavelength, "wavelength", "nm", 1e-9},
};

const ParameterInfo& info(SweepParameter p) {
  for (const auto& i : parameter_table)
    if (i.p == p) return i;
  throw ConfigError("unknown sweep parameter");
}

bool is_integer(SweepParameter p) { return p == SweepParameter::wire_count; }

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

std::vector<SweepParameter> parameters_of(const SweepSpec& spec) {
  std::vector<SweepParameter> out;
  for (const auto& r : spec.ranges) out.push_back(r.parameter);
  return out;
}

bool feasible(const Evaluation& e, double min_margin) { return e.ok && e.margin_m >= min_margin - 1e-15; }

// Evaluate with every error turned into a failed row.
Evaluation guarded(const Objective& f, const std::vector<double>& values) {
  try {
    return f(values);
  } catch (const std::exception& e) {
    Evaluation ev;
    ev.status = e.what();
    return ev;
  }
}

}  // namespace

std::string_view to_string(SweepParameter p) noexcept {
  for (const auto& i : parameter_table)
    if (i.p == p) return i.name;
  return "?";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  for (const auto& i : parameter_table)
    if (i.name == name) return i.p;
  throw ConfigError("unknown sweep parameter '" + std::string(name) + "'");
}

std::vector<double> ParameterRange::values() const {
  std::vector<double> v;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long k = 0; k <= n; ++k) v.push_back(start + static_cast<double>(k) * step);
  return v;
}

void SweepSpec::validate() const {
  if (ranges.empty()) throw ConfigError("sweep: at least one parameter range is required");
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const auto& r = ranges[i];
    const auto name = std::string(to_string(r.parameter));
    if (!(r.step > 0.0)) throw ConfigError("sweep: step for '" + name + "' must be > 0");
    if (!(r.stop >= r.start)) throw ConfigError("sweep: range for '" + name + "' is empty");
    for (std::size_t j = 0; j < i; ++j)
      if (ranges[j].parameter == r.parameter) throw ConfigError("sweep: '" + name + "' listed twice");
  }
  if (!(min_margin_m >= 0.0)) throw ConfigError("sweep: margin constraint must be >= 0");
  if (max_points == 0) throw ConfigError("sweep: point cap must be >= 1");
}

std::size_t SweepSpec::point_count() const {
  std::size_t n = 1;
  for (const auto& r : ranges) {
    const auto k = r.values().size();
    if (n > max_points && k > 0) return n * k;  // already over the cap; avoid overflow
    n *= k;
  }
  return n;
}

void SweepResult::write_csv(std::ostream& out) const {
  for (auto p : parameters) {
    const auto& i = info(p);
    out << i.name << (i.unit.empty() ? "" : "_") << i.unit << ',';
  }
  out << "n_eff_re,n_eff_im,alpha_per_cm,te_fraction,margin_um,feasible,status\n";
  const auto old_precision = out.precision(12);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < parameters.size(); ++k) out << r.values[k] / info(parameters[k]).scale << ',';
    if (r.eval.ok)
      out << r.eval.n_eff.real() << ',' << r.eval.n_eff.imag() << ',' << r.eval.alpha_per_cm << ','
          << r.eval.te_fraction << ',';
    else
      out << ",,,,";
    out << r.eval.margin_m * 1e6 << ',' << (r.feasible ? "true" : "false") << ',';
    std::string status = r.eval.ok ? "ok" : r.eval.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << (status.empty() ? "failed" : status) << '\n';
  }
  out.precision(old_precision);
}

CrossSection apply_parameters(const CrossSection& base, const std::vector<SweepParameter>& params,
                              const std::vector<double>& values) {
  if (params.size() != values.size()) throw ConfigError("parameter/value count mismatch");
  LayerStack stack = base.stack();
  RidgeSpec ridge = base.ridge();
  auto wires = base.wires();
  double wavelength = base.wavelength();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double v = values[i];
    switch (params[i]) {
      case SweepParameter::gaas_thickness: stack.layers.back().thickness_m = v; break;
      case SweepParameter::ridge_width: ridge.width_m = v; break;
      case SweepParameter::etch_depth: ridge.etch_depth_m = v; break;
      case SweepParameter::wavelength: wavelength = v; break;
      case SweepParameter::wire_count:
      case SweepParameter::array_offset:
        if (!wires) throw ConfigError("sweep: '" + std::string(to_string(params[i])) + "' needs a nanowire array");
        if (params[i] == SweepParameter::wire_count)
          wires->count = static_cast<int>(std::lround(v));
        else
          wires->offset_m = v;
        break;
    }
  }
  // Grow the window if the new geometry would eat into the cladding margins.
  Window window = base.window();
  const double reach = std::abs(ridge.center_m) + 0.5 * ridge.width_m + required_cladding_margin_m;
  window.width_m = std::max(window.width_m, 2.0 * reach);
  double solid_top = stack.total_thickness();
  if (wires) solid_top += wires->thickness_m + wires->cap_thickness_m;
  window.height_m = std::max(window.height_m, solid_top + required_cladding_margin_m);
  return {base.materials(), std::move(stack), ridge, std::move(wires), window, wavelength};
}

Objective mode_objective(const CrossSection& base, std::vector<SweepParameter> params,
                         ModeSelector selector, ResolutionPolicy policy, SolverConfig config) {
  return [base, params = std::move(params), selector, policy, config](const std::vector<double>& values) {
    Evaluation ev;
    const auto cs = apply_parameters(base, params, values);
    ev.margin_m = cs.wires() ? alignment_margin(cs.ridge(), *cs.wires()) : 0.5 * cs.ridge().width_m;
    const auto modes = solve_cross_section(cs, policy, config);
    const auto mode = select_mode(modes, selector);
    if (!mode) {
      ev.status = selector == ModeSelector::fundamental_te ? "no guided TE-like mode found"
                                                           : "no guided TM-like mode found";
      return ev;
    }
    ev.ok = true;
    ev.n_eff = mode->n_eff;
    ev.alpha_per_cm = modal_absorption_per_cm(*mode);
    ev.te_fraction = mode->te_fraction;
    ev.status = "ok";
    return ev;
  };
}

SweepResult run_sweep(const SweepSpec& spec, const Objective& objective) {
  spec.validate();
  const std::size_t total = spec.point_count();
  if (total > spec.max_points)
    throw ConfigError("sweep has " + std::to_string(total) + " points, above the cap of " +
                      std::to_string(spec.max_points));

  std::vector<std::vector<double>> axes;
  for (const auto& r : spec.ranges) axes.push_back(r.values());

  SweepResult result;
  result.parameters = parameters_of(spec);
  result.rows.resize(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    auto& values = result.rows[idx].values;
    values.resize(axes.size());
    std::size_t rem = idx;
    for (std::size_t k = axes.size(); k-- > 0;) {
      values[k] = axes[k][rem % axes[k].size()];
      rem /= axes[k].size();
    }
  }

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      auto& row = result.rows[i];
      row.eval = guarded(objective, row.values);
      row.feasible = feasible(row.eval, spec.min_margin_m);
    }
  };
  const unsigned n_workers = worker_count(spec.workers, total);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }

  for (std::size_t i = 0; i < total; ++i) {
    const auto& r = result.rows[i];
    if (r.feasible && (!result.best || r.eval.alpha_per_cm > result.rows[*result.best].eval.alpha_per_cm))
      result.best = i;
  }
  return result;
}

SweepResult run_sweep(const CrossSection& base, const SweepSpec& spec, const ResolutionPolicy& policy,
                      const SolverConfig& config) {
  return run_sweep(spec, mode_objective(base, parameters_of(spec), spec.selector, policy, config));
}

OptimizationResult maximize_alpha(const SweepSpec& spec, const Objective& objective, double tolerance) {
  spec.validate();
  if (spec.ranges.size() > 2) throw ConfigError("optimizer: refinement supports 1 or 2 free parameters");
  if (!(tolerance > 0.0)) throw ConfigError("optimizer: tolerance must be > 0");

  OptimizationResult out;
  out.parameters = parameters_of(spec);
  const auto coarse = run_sweep(spec, objective);
  for (const auto& row : coarse.rows)
    out.trace.push_back({"coarse", 0.0, row});
  if (!coarse.best) {
    out.message = "no feasible point on the coarse grid";
    return out;
  }

  std::map<std::vector<double>, std::size_t> seen;  // values -> trace index
  for (std::size_t i = 0; i < out.trace.size(); ++i) seen.emplace(out.trace[i].row.values, i);

  std::vector<double> best = coarse.rows[*coarse.best].values;
  Evaluation best_eval = coarse.rows[*coarse.best].eval;
  const std::size_t dims = spec.ranges.size();
  std::vector<double> h(dims);
  for (std::size_t d = 0; d < dims; ++d) h[d] = 0.5 * spec.ranges[d].step;

  auto resolved = [&](std::size_t d) {
    return is_integer(spec.ranges[d].parameter) ? h[d] < 1.0 : h[d] < tolerance;
  };
  auto all_resolved = [&] {
    for (std::size_t d = 0; d < dims; ++d)
      if (!resolved(d)) return false;
    return true;
  };

  while (!all_resolved()) {
    bool improved = false;
    for (std::size_t d = 0; d < dims && !improved; ++d) {
      if (resolved(d)) continue;
      for (double sign : {-1.0, 1.0}) {
        std::vector<double> cand = best;
        cand[d] += sign * h[d];
        if (is_integer(spec.ranges[d].parameter)) cand[d] = std::round(cand[d]);
        const auto& r = spec.ranges[d];
        if (cand[d] < r.start - 1e-12 * r.step || cand[d] > r.stop + 1e-12 * r.step) continue;
        if (seen.count(cand)) continue;
        SweepRow row{cand, guarded(objective, cand), false};
        row.feasible = feasible(row.eval, spec.min_margin_m);
        seen.emplace(cand, out.trace.size());
        out.trace.push_back({"refine", h[d], row});
        if (row.feasible && row.eval.alpha_per_cm > best_eval.alpha_per_cm) {
          best = cand;
          best_eval = row.eval;
          improved = true;
          break;
        }
      }
    }
    if (!improved)
      for (std::size_t d = 0; d < dims; ++d) h[d] *= 0.5;
  }

  out.feasible = true;
  out.best_values = best;
  out.best = best_eval;
  out.message = "ok";
  return out;
}

OptimizationResult maximize_alpha(const CrossSection& base, const SweepSpec& spec,
                                  const ResolutionPolicy& policy, const SolverConfig& config,
                                  double tolerance) {
  return maximize_alpha(spec, mode_objective(base, parameters_of(spec), spec.selector, policy, config),
                        tolerance);
}

}  // namespace wspd
