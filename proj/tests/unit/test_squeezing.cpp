#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fewphoton/fewphoton.hpp"

using namespace fewphoton;

namespace {

DensityMatrix prepared(int num_atoms, double alpha, double tau) {
  PrepConfig cfg;
  cfg.num_atoms = num_atoms;
  cfg.alpha = alpha;
  cfg.tau1 = tau;
  cfg.phi_grid = {};
  return stage1_prepare(cfg).rho_atom;
}

}  // namespace

TEST(Transverse, NorthPoleCoherent) {
  const auto rho = to_density(dicke_basis_state(10, DickeSpace(10)));
  const auto t = min_transverse_variance(rho);
  EXPECT_NEAR(t.lambda_min, 2.5, 1e-12);
  EXPECT_NEAR(t.lambda_max, 2.5, 1e-12);
  EXPECT_NEAR(t.direction.dot(Vec3::UnitZ()), 1.0, 1e-14);
  EXPECT_NEAR(t.e1.dot(t.direction), 0.0, 1e-14);
  EXPECT_NEAR(t.e2.dot(t.e1), 0.0, 1e-14);
}

TEST(Transverse, DegenerateMeanSpinIsReported) {
  const DickeSpace space(4);
  const auto d = static_cast<Eigen::Index>(space.dim());
  const DensityMatrix mixed{SpaceInfo::of(space), CMatrix::Identity(d, d) / static_cast<double>(d)};
  try {
    min_transverse_variance(mixed);
    FAIL() << "expected DegenerateMeanSpin";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateMeanSpin);
  }
  // Dicke state m = 0 has <S> = 0 as well.
  EXPECT_THROW(min_transverse_variance(to_density(dicke_basis_state(2, space))), Error);
}

TEST(Transverse, StageOneStateIsSqueezed) {
  // Stage-1 optimum for N = 20 on the alpha in [1, 6] x tau1 in [0, 3] grid.
  const auto rho = prepared(20, 6.0, 0.797053);
  const auto t = min_transverse_variance(rho);
  EXPECT_LT(t.lambda_min, t.mean.magnitude() / 2);
  EXPECT_GT(t.lambda_max, t.mean.magnitude() / 2);
  // The min axis is perpendicular to the mean and carries lambda_min.
  const auto m = spin_moments(rho);
  EXPECT_NEAR(t.min_axis.dot(t.direction), 0.0, 1e-12);
  EXPECT_NEAR(m.variance_along(t.min_axis), t.lambda_min, 1e-10);
  EXPECT_NEAR(m.variance_along(t.max_axis), t.lambda_max, 1e-10);
}

TEST(Transverse, RotationInvariance) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, kPi);
  const auto rho = prepared(12, 1.8, 0.7);
  const auto base = min_transverse_variance(rho);
  for (int trial = 0; trial < 8; ++trial) {
    const auto r = stage2_rotate(rho, u(rng), 2 * u(rng));
    const auto t = min_transverse_variance(r);
    EXPECT_NEAR(t.lambda_min, base.lambda_min, 1e-10);
    EXPECT_NEAR(t.lambda_max, base.lambda_max, 1e-10);
  }
}

TEST(Criteria, StrictComparisonBand) {
  EXPECT_TRUE(strict_less(1.0, 2.0).satisfied);
  EXPECT_FALSE(strict_less(2.0, 1.0).satisfied);
  const auto tie = strict_less(2.5, 2.5);
  EXPECT_FALSE(tie.satisfied);
  EXPECT_TRUE(tie.boundary);
  EXPECT_TRUE(strict_less(2.5 - 1e-12, 2.5).boundary);
  EXPECT_FALSE(strict_less(2.5 - 1e-6, 2.5).boundary);
}

TEST(Criteria, CoherentStateIsOnTheBoundary) {
  const DickeSpace space(20);
  for (double theta : {kPi * 0.75, kPi * 0.9, kPi}) {
    const auto rho = to_density(bloch_state(theta, 0.3, space));
    const auto t = min_transverse_variance(rho);
    const auto r = condition_tailor_made(t);
    EXPECT_FALSE(r.satisfied);
    EXPECT_TRUE(r.boundary) << theta;
  }
}

TEST(Criteria, SouthPoleCoherentFieldCondition) {
  // Var(S') = S/2 = |<Sz>|/2: marginal for every phi.
  const auto rho = to_density(dicke_basis_state(0, DickeSpace(10)));
  for (double phi : {0.0, 1.0, kPi / 2}) {
    const auto r = condition_field_squeeze(rho, phi);
    EXPECT_FALSE(r.satisfied);
    EXPECT_TRUE(r.boundary);
  }
}

TEST(Criteria, FieldConditionNeedsNegativeSz) {
  // Squeezed state pointing north: variances are fine but <Sz> > 0.
  const auto rho = prepared(10, 2.0, 0.5);
  const auto orient = stage2_auto_orient(rho, AutoOrient{kPi, 0.0});
  const auto m = spin_moments(orient.rho);
  EXPECT_GT(m.mean(2), 0.0);
  for (double phi : {0.0, kPi / 4, kPi / 2}) EXPECT_FALSE(condition_field_squeeze(m, phi).satisfied);
}

TEST(Criteria, TiltedBlochSeparatesTailorMadeFromPopular) {
  const DickeSpace space(50);
  const auto rho = to_density(bloch_state(3 * kPi / 4, 0.0, space));
  const auto m = spin_moments(rho);
  const auto t = transverse_covariance(m);
  const auto popular = condition_popular(m, Axis::X);
  EXPECT_TRUE(popular.satisfied);
  EXPECT_NEAR(popular.lhs, 6.25, 1e-10);
  EXPECT_NEAR(popular.rhs, 25 * std::cos(kPi / 4) / 2, 1e-10);
  EXPECT_FALSE(condition_tailor_made(t).satisfied);
  EXPECT_FALSE(condition_popular(m, Axis::Y).satisfied);
  // The a_phi condition at phi = pi/2 reads Var(Sx).
  EXPECT_TRUE(condition_field_squeeze(m, kPi / 2).satisfied);
}

TEST(Criteria, ReportCollectsEverything) {
  const auto rho = prepared(10, 3.0, 0.566621);
  const auto oriented = stage2_auto_orient(rho, AutoOrient::phase()).rho;
  const auto r = squeezing_report(oriented, {0.0, kPi / 4, kPi / 2});
  ASSERT_EQ(r.field_squeeze.size(), 3u);
  EXPECT_TRUE(r.tailor_made.satisfied);
  EXPECT_NEAR(r.zeta, r.transverse.lambda_min / (r.transverse.mean.magnitude() / 2), 1e-14);
  EXPECT_LT(r.zeta, 1.0);
  // Phase orientation squeezes Sx, which the a_{pi/2} quadrature inherits.
  EXPECT_TRUE(r.popular_x.satisfied);
  EXPECT_TRUE(r.field_squeeze[2].result.satisfied);
  EXPECT_FALSE(r.field_squeeze[0].result.satisfied);
}

TEST(AutoOrient, PlacesMeanAndSqueezeAxis) {
  const auto rho = prepared(16, 2.0, 0.4);
  for (double theta : {kPi / 12, kPi / 6, kPi / 3}) {
    for (double chi : {0.0, kPi / 4, kPi / 2}) {
      const auto out = stage2_auto_orient(rho, AutoOrient{theta, chi});
      const auto t = min_transverse_variance(out.rho);
      const Vec3 n(0.0, std::sin(theta), -std::cos(theta));
      EXPECT_NEAR(t.direction.dot(n), 1.0, 1e-10);
      const Vec3 u = std::cos(chi) * Vec3::UnitX() + std::sin(chi) * Vec3(0.0, std::cos(theta), std::sin(theta));
      EXPECT_NEAR(std::abs(t.min_axis.dot(u)), 1.0, 1e-8);
      EXPECT_NEAR((out.rotation * out.rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff(), 0.0, 1e-12);
      EXPECT_NEAR(out.rotation.determinant(), 1.0, 1e-12);
    }
  }
}

TEST(AutoOrient, NamedPresets) {
  EXPECT_EQ(AutoOrient::phase().chi, 0.0);
  EXPECT_EQ(AutoOrient::amplitude().chi, kPi / 2);
  EXPECT_EQ(AutoOrient::phase().theta_from_south, kPi / 6);
}

TEST(Approximation, ClosedFormValues) {
  const auto v0 = approx_variances(25, 4.0, 0.0);
  EXPECT_DOUBLE_EQ(v0.field_variance, 0.25);
  EXPECT_DOUBLE_EQ(v0.spin_variance, 4.0);
  const double tmin = approx_min_time(25);
  EXPECT_NEAR(tmin, kPi / (2 * std::sqrt(50.0)), 1e-15);
  const auto vm = approx_variances(25, 4.0, tmin);
  EXPECT_NEAR(vm.field_variance, 4.0 / 50, 1e-14);
  EXPECT_NEAR(vm.spin_variance, 12.5, 1e-12);
  EXPECT_NEAR(approx_period(25), 2 * tmin, 1e-15);
}

TEST(Approximation, SmallAngleRegime) {
  const auto rho = prepared(50, 5.5, 0.254214);
  const auto oriented = stage2_auto_orient(rho, AutoOrient{kPi / 12, kPi / 2}).rho;
  const Radiator radiator(50);
  const auto c = compare_exact_vs_approx(radiator, oriented, Range{0.0, 0.7, 141}.values(), 0.0);
  EXPECT_LT(c.var0, c.s0 / 2);
  EXPECT_LE(c.rel_dev_at_min, 0.05);
  EXPECT_LE(std::abs(c.exact_min_tau - c.approx_min_tau) / c.approx_min_tau, 0.05);
  EXPECT_GT(c.exact_period, 0.0);
  EXPECT_LE(std::abs(c.exact_period - c.approx_period) / c.approx_period, 0.05);
}

TEST(Thermal, OccupancyValues) {
  EXPECT_EQ(thermal_occupancy(1e9, 0.0), 0.0);
  // h nu = k T gives 1 / (e - 1).
  const double nu = kBoltzmann * 1.0 / kPlanck;
  EXPECT_NEAR(thermal_occupancy(nu, 1.0), 1.0 / (std::exp(1.0) - 1.0), 1e-14);
  // High-temperature limit k T / h nu - 1/2.
  const double high = thermal_occupancy(1e6, 300.0);
  EXPECT_NEAR(high, kBoltzmann * 300 / (kPlanck * 1e6) - 0.5, 1e-3);
  EXPECT_THROW(thermal_occupancy(-1.0, 1.0), Error);
  EXPECT_THROW(thermal_occupancy(1.0, -1.0), Error);
}

TEST(Thermal, FeasibilityWindow) {
  const auto ok = feasibility_report(1e5, 0.25, 1e-3, 1e-3);
  EXPECT_NEAR(ok.time_s, 2.5e-6, 1e-20);
  EXPECT_TRUE(ok.feasible());
  const auto slow = feasibility_report(1e2, 0.25, 1e-3, 1e-1);
  EXPECT_FALSE(slow.within_atomic_lifetime);
  EXPECT_TRUE(slow.within_cavity_lifetime);
  EXPECT_FALSE(slow.feasible());
  EXPECT_THROW(feasibility_report(0.0, 1.0, 1.0, 1.0), Error);
}
