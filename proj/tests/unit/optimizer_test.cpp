#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "wspd/error.hpp"
#include "wspd/optimizer.hpp"

namespace wspd {
namespace {

ParameterRange range(SweepParameter p, double start, double stop, double step) { return {p, start, stop, step}; }

// Concave in thickness with a peak at 312.3 nm, feasible everywhere.
Evaluation bowl(const std::vector<double>& v) {
  const double d = (v[0] - 312.3e-9) / 1e-9;
  Evaluation e;
  e.ok = true;
  e.alpha_per_cm = 600.0 - 0.05 * d * d;
  e.n_eff = {3.15, 0.0};
  e.te_fraction = 0.99;
  e.margin_m = 0.5e-6;
  return e;
}

// Absorption grows toward the ridge edge; the margin constraint caps it.
Evaluation edge_seeking(const std::vector<double>& v) {
  auto e = bowl(v);
  const double offset = v[1];
  e.alpha_per_cm += 1e9 * offset;  // +100 per 100 nm
  e.margin_m = 0.6e-6 - std::abs(offset);
  return e;
}

TEST(Sweep, RowsInCartesianOrderLastParameterFastest) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 300e-9, 25e-9),
                 range(SweepParameter::array_offset, 0.0, 100e-9, 50e-9)};
  const auto r = run_sweep(spec, edge_seeking);
  ASSERT_EQ(r.rows.size(), 9u);
  EXPECT_NEAR(r.rows[0].values[0], 250e-9, 1e-18);
  EXPECT_NEAR(r.rows[1].values[1], 50e-9, 1e-18);
  EXPECT_NEAR(r.rows[3].values[0], 275e-9, 1e-18);
  // offset 100 nm leaves exactly 0.5 um
  EXPECT_TRUE(r.rows[2].feasible);
  ASSERT_TRUE(r.best.has_value());
  EXPECT_NEAR(r.rows[*r.best].values[1], 100e-9, 1e-18);
}

TEST(Sweep, OutputIsByteIdenticalAcrossRunsAndWorkerCounts) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 350e-9, 10e-9),
                 range(SweepParameter::array_offset, 0.0, 150e-9, 25e-9)};
  std::string first;
  for (unsigned workers : {1u, 3u, 1u, 4u}) {
    spec.workers = workers;
    std::ostringstream out;
    run_sweep(spec, edge_seeking).write_csv(out);
    if (first.empty())
      first = out.str();
    else
      EXPECT_EQ(out.str(), first) << workers;
  }
}

TEST(Sweep, FailuresAreRecordedPerRow) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 300e-9, 25e-9)};
  const auto r = run_sweep(spec, [](const std::vector<double>& v) -> Evaluation {
    if (v[0] > 270e-9) throw ConvergenceError("synthetic failure", 1.0);
    return bowl(v);
  });
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.rows[0].eval.ok);
  EXPECT_FALSE(r.rows[1].eval.ok);
  EXPECT_NE(r.rows[1].eval.status.find("synthetic failure"), std::string::npos);
  EXPECT_FALSE(r.rows[2].feasible);
}

TEST(Sweep, PointCapIsEnforced) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 0.0, 1e-6, 1e-9),
                 range(SweepParameter::array_offset, 0.0, 100e-9, 1e-9)};
  spec.max_points = 1000;
  try {
    run_sweep(spec, bowl);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("101101"), std::string::npos) << e.what();
  }
}

TEST(Sweep, SpecValidation) {
  SweepSpec spec;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.ranges = {range(SweepParameter::gaas_thickness, 300e-9, 250e-9, 10e-9)};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 300e-9, 0.0)};
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Optimize, RecoversSyntheticArgmaxWithinTolerance) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 350e-9, 25e-9)};
  const auto r = maximize_alpha(spec, bowl, 5e-9);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.best_values[0], 312.3e-9, 5e-9);
}

TEST(Optimize, ConstrainedOptimumRespectsMarginAndDominatesTrace) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 350e-9, 25e-9),
                 range(SweepParameter::array_offset, 0.0, 200e-9, 50e-9)};
  const auto r = maximize_alpha(spec, edge_seeking, 2e-9);
  ASSERT_TRUE(r.feasible);
  EXPECT_GE(r.best.margin_m, spec.min_margin_m - 1e-15);
  EXPECT_NEAR(r.best_values[0], 312.3e-9, 5e-9);
  EXPECT_NEAR(r.best_values[1], 100e-9, 5e-9);
  for (const auto& t : r.trace) {
    for (std::size_t k = 0; k < spec.ranges.size(); ++k) {
      EXPECT_GE(t.row.values[k], spec.ranges[k].start - 1e-15);
      EXPECT_LE(t.row.values[k], spec.ranges[k].stop + 1e-15);
    }
    if (t.row.feasible) {
      EXPECT_GE(r.best.alpha_per_cm, t.row.eval.alpha_per_cm);
    }
  }
}

TEST(Optimize, ReportsInfeasibleWithoutThrowing) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 350e-9, 25e-9)};
  const auto r = maximize_alpha(spec, [](const std::vector<double>& v) {
    auto e = bowl(v);
    e.margin_m = 0.2e-6;
    return e;
  });
  EXPECT_FALSE(r.feasible);
  EXPECT_FALSE(r.message.empty());
  EXPECT_EQ(r.trace.size(), 5u);
}

TEST(Optimize, IntegerParametersStopAtUnitSteps) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::wire_count, 1, 9, 4)};
  const auto r = maximize_alpha(spec, [](const std::vector<double>& v) {
    Evaluation e;
    e.ok = true;
    e.alpha_per_cm = 100.0 - (v[0] - 6.0) * (v[0] - 6.0);
    e.margin_m = 1e-6;
    return e;
  });
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.best_values[0], 6.0);
  for (const auto& t : r.trace) EXPECT_EQ(t.row.values[0], std::round(t.row.values[0]));
}

TEST(Optimize, MoreThanTwoParametersRejected) {
  SweepSpec spec;
  spec.ranges = {range(SweepParameter::gaas_thickness, 250e-9, 350e-9, 25e-9),
                 range(SweepParameter::array_offset, 0.0, 200e-9, 50e-9),
                 range(SweepParameter::ridge_width, 1.8e-6, 1.9e-6, 50e-9)};
  EXPECT_THROW(maximize_alpha(spec, edge_seeking), ConfigError);
}

TEST(ApplyParameters, SetsFieldsAndKeepsMargins) {
  const auto cfg = test::paper_config();
  const auto cs = apply_parameters(cfg.cross_section,
                                   {SweepParameter::gaas_thickness, SweepParameter::ridge_width,
                                    SweepParameter::wire_count, SweepParameter::array_offset},
                                   {350e-9, 3.0e-6, 6.0, 50e-9});
  EXPECT_DOUBLE_EQ(cs.stack().core().thickness_m, 350e-9);
  EXPECT_DOUBLE_EQ(cs.ridge().width_m, 3.0e-6);
  EXPECT_EQ(cs.wires()->count, 6);
  EXPECT_DOUBLE_EQ(cs.wires()->offset_m, 50e-9);
  EXPECT_GE(0.5 * cs.window().width_m - 0.5 * cs.ridge().width_m, 1.5e-6 - 1e-15);
  EXPECT_GE(cs.window().height_m - cs.solid_top(), 1.5e-6 - 1e-15);
  const auto no_wires = load_config(test::config_path("paper_no_wires.json"));
  EXPECT_THROW(apply_parameters(no_wires.cross_section, {SweepParameter::wire_count}, {3.0}), ConfigError);
}

TEST(ApplyParameters, ParameterNamesRoundTrip) {
  for (auto p : {SweepParameter::gaas_thickness, SweepParameter::ridge_width, SweepParameter::etch_depth,
                 SweepParameter::wire_count, SweepParameter::array_offset, SweepParameter::wavelength})
    EXPECT_EQ(parse_sweep_parameter(to_string(p)), p);
  EXPECT_THROW(parse_sweep_parameter("thickness"), ConfigError);
}

}  // namespace
}  // namespace wspd
