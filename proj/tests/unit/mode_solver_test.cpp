#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"
#include "wspd/constants.hpp"
#include "wspd/error.hpp"
#include "wspd/mode_solver.hpp"

namespace wspd {
namespace {

// Planar (unetched) GaAs core in symmetric Al0.75GaAs cladding.
CrossSection slab(double core_m, double ridge_width_m, double etch_m) {
  const LayerStack st{"GaAs", {{"AlGaAs_0.75", 1.5e-6}, {"GaAs", core_m}}, "AlGaAs_0.75"};
  return CrossSection(builtin_library({0.75}), st, RidgeSpec{ridge_width_m, etch_m, 0.0}, std::nullopt,
                      Window{ridge_width_m + 3.0e-6, 3.0e-6 + core_m}, 1.3e-6);
}

class NoWires : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto cfg = load_config(test::config_path("paper_no_wires.json"));
    cs_ = new CrossSection(cfg.cross_section);
    grid_ = new PermittivityGrid(rasterize(*cs_, test::coarse_policy()));
    modes_ = new std::vector<ModeSolution>(solve_modes(assemble_operator(*grid_, cs_->wavelength()),
                                                       default_solver_config(*cs_)));
  }
  static void TearDownTestSuite() {
    delete modes_;
    delete grid_;
    delete cs_;
  }
  static CrossSection* cs_;
  static PermittivityGrid* grid_;
  static std::vector<ModeSolution>* modes_;
};
CrossSection* NoWires::cs_ = nullptr;
PermittivityGrid* NoWires::grid_ = nullptr;
std::vector<ModeSolution>* NoWires::modes_ = nullptr;

TEST_F(NoWires, LosslessModesHaveRealIndex) {
  ASSERT_FALSE(modes_->empty());
  for (const auto& m : *modes_) EXPECT_LT(std::abs(m.n_eff.imag()), 1e-9) << m.n_eff;
}

TEST_F(NoWires, EveryModeIsBracketed) {
  const double lo = cs_->cladding_index(), hi = cs_->max_index();
  for (const auto& m : *modes_) {
    EXPECT_GT(m.n_eff.real(), lo);
    EXPECT_LT(m.n_eff.real(), hi);
  }
  for (std::size_t i = 1; i < modes_->size(); ++i)
    EXPECT_GE((*modes_)[i - 1].n_eff.real(), (*modes_)[i].n_eff.real());
}

TEST_F(NoWires, FundamentalIsTeAndMirrorSymmetric) {
  const auto te = select_mode(*modes_, ModeSelector::fundamental_te);
  ASSERT_TRUE(te.has_value());
  EXPECT_GT(te->te_fraction, 0.9);
  EXPECT_EQ(te->polarization(), Polarization::te_like);
  EXPECT_DOUBLE_EQ(te->n_eff.real(), modes_->front().n_eff.real());

  for (const FieldComponent* f : {&te->ex, &te->ey, &te->hx, &te->hy}) {
    const std::size_t nx = f->nx();
    for (std::size_t i = 0; i < nx; ++i) ASSERT_NEAR(f->x[i], -f->x[nx - 1 - i], 1e-15);
    // Even or odd about x = 0; pick the sign from the data.
    Complex even = 0.0, odd = 0.0;
    for (std::size_t iy = 0; iy < f->ny(); ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        even += std::abs(f->at(ix, iy) - f->at(nx - 1 - ix, iy));
        odd += std::abs(f->at(ix, iy) + f->at(nx - 1 - ix, iy));
      }
    const double sign = std::abs(even) <= std::abs(odd) ? 1.0 : -1.0;
    double worst = 0.0;
    for (std::size_t iy = 0; iy < f->ny(); ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix)
        worst = std::max(worst, std::abs(f->at(ix, iy) - sign * f->at(nx - 1 - ix, iy)));
    EXPECT_LT(worst / f->max_abs(), 1e-6);
  }
}

TEST_F(NoWires, ModesArePowerNormalized) {
  for (const auto& m : *modes_) {
    EXPECT_TRUE(m.normalized);
    EXPECT_NEAR(m.power_w, 1.0, 1e-9);
    EXPECT_LT(m.residual, 1e-8);
  }
}

TEST(ModeSolver, DeterministicToTheLastBit) {
  const auto cfg = load_config(test::config_path("paper_no_wires.json"));
  const auto a = solve_cross_section(cfg.cross_section, test::coarse_policy());
  const auto b = solve_cross_section(cfg.cross_section, test::coarse_policy());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].n_eff, b[i].n_eff);
    EXPECT_EQ(a[i].ex.values, b[i].ex.values);
  }
}

TEST(ModeSolver, PlanarSlabConvergesToAnalyticRoot) {
  const double exact = test::ref("slab_te0", "GaAs_200nm_in_AlGaAs_0.75");
  const auto cs = slab(200e-9, 4.0e-6, 0.0);
  ResolutionPolicy p;
  p.far_m = 200e-9;
  double err[2];
  for (int k = 0; k < 2; ++k) {
    const auto modes = solve_cross_section(cs, p.scaled(k == 0 ? 2.0 : 1.0));
    const auto te = select_mode(modes, ModeSelector::fundamental_te);
    ASSERT_TRUE(te.has_value());
    EXPECT_LT(std::abs(te->n_eff.imag()), 1e-9);
    err[k] = std::abs(te->n_eff.real() - exact);
  }
  EXPECT_LT(err[1], 5e-4);
  // At least first order; the scheme is second order on this mesh.
  EXPECT_GT(err[0] / err[1], 2.0) << err[0] << " " << err[1];
}

TEST(ModeSolver, EtchedRidgeApproachesSlabFromBelow) {
  const double exact = test::ref("slab_te0", "GaAs_200nm_in_AlGaAs_0.75");
  auto p = test::coarse_policy();
  p.far_m = 200e-9;
  double gap[2];
  const double widths[2] = {2.0e-6, 4.0e-6};
  for (int k = 0; k < 2; ++k) {
    const auto modes = solve_cross_section(slab(200e-9, widths[k], 200e-9), p);
    const auto te = select_mode(modes, ModeSelector::fundamental_te);
    ASSERT_TRUE(te.has_value());
    gap[k] = exact - te->n_eff.real();
  }
  EXPECT_GT(gap[0], gap[1]);
  EXPECT_GT(gap[1], 0.0);
}

TEST(ModeSolver, AbsorbingWiresGiveDecayingModes) {
  const auto cfg = test::paper_config();
  auto p = cfg.resolution;
  p.base_m = 40e-9;
  p.far_m = 120e-9;
  const auto modes = solve_cross_section(cfg.cross_section, p);
  ASSERT_FALSE(modes.empty());
  for (const auto& m : modes) {
    EXPECT_GT(m.n_eff.imag(), 0.0);
    EXPECT_NEAR(modal_absorption_per_cm(m), 4.0 * constants::pi * m.n_eff.imag() / m.wavelength_m / 100.0,
                1e-9 * modal_absorption_per_cm(m));
    EXPECT_NEAR(m.alpha_per_m(), 2.0 * constants::wavenumber(m.wavelength_m) * m.n_eff.imag(), 1e-9 * m.alpha_per_m());
  }
  const auto te = select_mode(modes, ModeSelector::fundamental_te);
  const auto tm = select_mode(modes, ModeSelector::first_tm);
  ASSERT_TRUE(te && tm);
  EXPECT_GT(te->te_fraction, 0.5);
  EXPECT_LT(tm->te_fraction, 0.5);
}

TEST(ModeSolver, ConvergenceStudyNeedsThreeLevels) {
  const auto cfg = test::paper_config();
  EXPECT_THROW(convergence_study(cfg.cross_section, {1.0, 0.5}, cfg.resolution, ModeSelector::fundamental_te),
               ConfigError);
}

}  // namespace
}  // namespace wspd
