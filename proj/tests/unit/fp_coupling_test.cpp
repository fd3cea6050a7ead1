#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"
#include "wspd/constants.hpp"
#include "wspd/error.hpp"
#include "wspd/fp_coupling.hpp"

namespace wspd {
namespace {

using constants::pi;

FringeData render(double r, double eta, double a) {
  return {fp_transmission(r, eta, a, 0.0), fp_transmission(r, eta, a, pi), a};
}

TEST(FabryPerot, PaperFringes) {
  const auto c = extract_coupling({0.061, 0.018, 1.0});
  EXPECT_NEAR(c.coupling, test::ref("fabry_perot", "coupling"), 1e-15);
  EXPECT_NEAR(c.facet_reflectivity, test::ref("fabry_perot", "facet_reflectivity"), 1e-15);
  EXPECT_NEAR(c.mode_match, test::ref("fabry_perot", "mode_match"), 1e-15);
  EXPECT_NEAR(c.contrast, std::sqrt(0.061 / 0.018), 1e-15);
}

TEST(FabryPerot, TransmissionShape) {
  test::for_all(300, 21, [](auto& rng, int) {
    const double r = test::uniform(rng, 0.05, 0.8), eta = test::uniform(rng, 0.05, 1.0),
                 a = test::uniform(rng, 0.3, 1.0);
    const double tmax = fp_transmission(r, eta, a, 0.0), tmin = fp_transmission(r, eta, a, pi);
    for (int k = 0; k <= 64; ++k) {
      const double phi = -4.0 * pi + 8.0 * pi * k / 64.0;
      const double t = fp_transmission(r, eta, a, phi);
      ASSERT_NEAR(t, fp_transmission(r, eta, a, phi + 2.0 * pi), 1e-14);
      ASSERT_LE(t, tmax * (1.0 + 1e-14));
      ASSERT_GE(t, tmin * (1.0 - 1e-14));
    }
  });
}

TEST(FabryPerot, ExtractInvertsRenderWithinMachinePrecision) {
  int cases = 0;
  test::for_all(2000, 22, [&](auto& rng, int) {
    const double r = test::uniform(rng, 0.05, 0.8), eta = test::uniform(rng, 0.05, 1.0);
    const double a = test::uniform(rng, 0.0, 1.0) < 0.5 ? 1.0 : test::uniform(rng, 0.3, 1.0);
    const auto c = extract_coupling(render(r, eta, a));
    ASSERT_NEAR(c.facet_reflectivity, r, 1e-12);
    ASSERT_NEAR(c.mode_match, eta, 1e-12);
    ASSERT_NEAR(c.coupling, eta * (1.0 - r), 1e-12);
    ++cases;
  });
  EXPECT_GE(cases, 1000);
}

TEST(FabryPerot, CouplingDecreasesWithReflectivityAtFixedPeak) {
  const double tmax = 0.061;
  double prev = 1.0;
  for (double r = 0.05; r < 0.8; r += 0.01) {
    const double k = (1.0 + r) / (1.0 - r);
    const auto c = extract_coupling({tmax, tmax / (k * k), 1.0});
    ASSERT_NEAR(c.facet_reflectivity, r, 1e-12);
    ASSERT_LT(c.coupling, prev);
    prev = c.coupling;
  }
}

// Attributing part of the fringe contrast to propagation loss raises the
// facet reflectivity estimate but also raises eta_c: the lossless
// extraction is the conservative (lower) bound.
TEST(FabryPerot, LosslessExtractionLowerBoundsCoupling) {
  test::for_all(1000, 23, [](auto& rng, int) {
    const double r = test::uniform(rng, 0.05, 0.6), eta = test::uniform(rng, 0.05, 0.9);
    const auto f = render(r, eta, 1.0);
    const double a = test::uniform(rng, 0.9, 0.999);
    const double lossless = extract_coupling(f).coupling;
    try {
      const double lossy = extract_coupling({f.t_max, f.t_min, a}).coupling;
      ASSERT_GE(lossy, lossless);
    } catch (const InconsistencyError&) {
      // eta_m > 1 or R_f >= 1 at this a: no physical solution to compare.
    }
  });
}

TEST(FabryPerot, RejectsInconsistentInputs) {
  EXPECT_THROW(extract_coupling({0.018, 0.061, 1.0}), ConfigError);
  EXPECT_THROW(extract_coupling({0.061, 0.018, 1.5}), ConfigError);
  // Lossless data always gives eta_m = sqrt(t_max) <= 1; a loss term can push it over.
  EXPECT_NO_THROW(extract_coupling({0.95, 0.9, 1.0}));
  EXPECT_THROW(extract_coupling({0.95, 0.9, 0.9}), InconsistencyError);  // eta_m > 1
  EXPECT_THROW(extract_coupling({0.5, 0.01, 0.2}), InconsistencyError);  // R_f >= 1
}

TEST(FabryPerot, FresnelOfGaAsGuide) {
  const double n = 3.156;
  EXPECT_NEAR(fresnel_reflectivity({n, 0.0}), std::pow((n - 1) / (n + 1), 2), 1e-15);
}

TEST(FabryPerot, ScanExtremaAndCsv) {
  std::ostringstream csv;
  csv << "# synthetic scan\nwavelength_nm,transmission\n";
  const double r = 0.3, eta = 0.25;
  for (int k = 0; k < 4001; ++k) {
    const double lam = 1290.0 + 20.0 * k / 4000.0;
    csv << lam << ',' << fp_transmission(r, eta, 1.0, 2.0 * pi * lam / 0.7) << '\n';
  }
  std::istringstream in(csv.str());
  const auto scan = read_scan_csv(in);
  ASSERT_EQ(scan.size(), 4001u);
  const auto f = fringe_extrema(scan);
  const auto exact = render(r, eta, 1.0);
  EXPECT_NEAR(f.t_max / exact.t_max, 1.0, 0.02);
  EXPECT_NEAR(f.t_min / exact.t_min, 1.0, 0.05);

  std::istringstream bad("lambda,T\n1300,0.1\n");
  EXPECT_THROW(read_scan_csv(bad), ConfigError);
}

}  // namespace
}  // namespace wspd
