#include <gtest/gtest.h>

#include <cmath>

#include "fewphoton/fewphoton.hpp"

using namespace fewphoton;

TEST(FieldQ, VacuumIsGaussian) {
  const auto vac = fock_state(0, FockSpace(6));
  const QGridSpec spec{-4, 4, -4, 4, 161};
  const auto q = field_q(vac, spec);
  EXPECT_NEAR(q.integral(), 1.0, 1e-6);
  const int mid = 80;
  EXPECT_NEAR(q.values(mid, mid), 1 / kPi, 1e-14);
  const double x = spec.re(100), y = spec.im(70);
  EXPECT_NEAR(q.values(70, 100), std::exp(-(x * x + y * y)) / kPi, 1e-14);
}

TEST(FieldQ, CoherentPeakAndOrientation) {
  const Complex beta(1.5, -0.5);
  const auto psi = coherent_state(beta, FockSpace(40));
  const QGridSpec spec{-6, 6, -6, 6, 241};
  const auto q = field_q(psi, spec);
  Eigen::Index r = 0, c = 0;
  q.values.maxCoeff(&r, &c);
  EXPECT_NEAR(spec.re(static_cast<int>(c)), beta.real(), 0.051);
  EXPECT_NEAR(spec.im(static_cast<int>(r)), beta.imag(), 0.051);
  EXPECT_NEAR(q.integral(), 1.0, 1e-6);
  EXPECT_GE(q.values.minCoeff(), 0.0);
}

TEST(FieldQ, FockOneRing) {
  const auto one = fock_state(1, FockSpace(4));
  const QGridSpec spec{-3, 3, -3, 3, 121};
  const auto q = field_q(one, spec);
  EXPECT_NEAR(q.values(60, 60), 0.0, 1e-15);
  const double x = spec.re(80);
  EXPECT_NEAR(q.values(60, 80), x * x * std::exp(-x * x) / kPi, 1e-14);
}

TEST(FieldQ, EdgePopulationGuard) {
  const auto top = fock_state(4, FockSpace(4));
  try {
    field_q(top, QGridSpec{});
    FAIL() << "expected CutoffTooSmall";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CutoffTooSmall);
  }
  EXPECT_THROW(field_q(fock_state(0, FockSpace(2)), QGridSpec{-1, 1, -1, 1, 1}), Error);
  EXPECT_THROW(field_q(to_density(dicke_basis_state(0, DickeSpace(2))), QGridSpec{}), Error);
}

TEST(FieldQ, JointReductionMatches) {
  const auto js = JointSpace::make(2, 12);
  const auto psi = product_state(dicke_basis_state(1, js->dicke()), coherent_state(0.3, js->fock()));
  const QGridSpec spec{-3, 3, -3, 3, 61};
  const auto direct = field_q(partial_trace(psi, Keep::Field), spec);
  const auto via = field_q(psi, spec);
  const auto ens = field_q(as_ensemble(psi, js), spec);
  EXPECT_LE((direct.values - via.values).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((direct.values - ens.values).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(QGridSpec, AtomWindow) {
  const auto s = QGridSpec::for_atoms(16, 11);
  EXPECT_DOUBLE_EQ(s.re_max, 7.0);
  EXPECT_DOUBLE_EQ(s.im_min, -7.0);
  EXPECT_DOUBLE_EQ(s.re(10), 7.0);
  EXPECT_NEAR(s.cell_area(), 1.4 * 1.4, 1e-14);
}

TEST(SpinHusimi, CoherentStatePeak) {
  const DickeSpace space(10);
  const double theta0 = 2.0, phi0 = 1.0;
  const auto rho = to_density(bloch_state(theta0, phi0, space));
  const BlochGridSpec spec{91, 180};
  const auto g = spin_husimi(rho, spec);
  EXPECT_NEAR(g.resolution_of_identity(), 1.0, 1e-3);
  EXPECT_LE(g.values.maxCoeff(), 1.0 + 1e-12);
  EXPECT_GE(g.values.minCoeff(), -1e-14);
  // Overlap of two spin coherent states: cos^{2S}(Theta / 2).
  for (int j : {30, 58, 64}) {
    for (int l : {0, 29, 90}) {
      const double th = spec.theta(j), ph = spec.phi(l);
      const double cos_angle =
          std::cos(th) * std::cos(theta0) + std::sin(th) * std::sin(theta0) * std::cos(ph - phi0);
      EXPECT_NEAR(g.values(j, l), std::pow((1 + cos_angle) / 2, 10), 1e-12) << j << "," << l;
    }
  }
}

TEST(SpinHusimi, DickeStateIsAzimuthal) {
  const DickeSpace space(6);
  const auto rho = to_density(dicke_basis_state(2, space));
  const auto g = spin_husimi(rho, BlochGridSpec{61, 72});
  for (int j = 0; j < 61; ++j) EXPECT_LE(g.values.row(j).maxCoeff() - g.values.row(j).minCoeff(), 1e-13);
  EXPECT_NEAR(g.resolution_of_identity(), 1.0, 1e-3);
}

TEST(SpinHusimi, MixedStatesNormalize) {
  PrepConfig cfg;
  cfg.num_atoms = 20;
  cfg.alpha = 2.0;
  cfg.tau1 = 0.6;
  cfg.phi_grid = {};
  const auto rho = stage1_prepare(cfg).rho_atom;
  EXPECT_NEAR(spin_husimi(rho, BlochGridSpec{}).resolution_of_identity(), 1.0, 1e-4);
  EXPECT_THROW(spin_husimi(to_density(fock_state(0, FockSpace(2))), BlochGridSpec{}), Error);
}

TEST(ProfileMatch, RadiatedFieldFollowsAtoms) {
  PrepConfig cfg;
  cfg.num_atoms = 20;
  cfg.alpha = 6.0;
  cfg.tau1 = 0.797053;
  cfg.phi_grid = {};
  const auto rho = stage1_prepare(cfg).rho_atom;
  const auto phase = stage2_auto_orient(rho, AutoOrient::phase()).rho;
  const auto amp = stage2_auto_orient(rho, AutoOrient::amplitude()).rho;
  const auto radiate = [&](const DensityMatrix& r) {
    const auto s3 = stage3_radiate(r, default_tau3_grid(r, 41), {});
    return field_q(s3.rho_field, QGridSpec::for_atoms(20, 121));
  };
  const BlochGridSpec bspec{91, 180};
  const auto q_phase = radiate(phase);
  const auto q_amp = radiate(amp);
  const auto h_phase = spin_husimi(phase, bspec);
  const auto h_amp = spin_husimi(amp, bspec);
  const double matched_p = profile_match(q_phase, h_phase), swapped_p = profile_match(q_phase, h_amp);
  const double matched_a = profile_match(q_amp, h_amp), swapped_a = profile_match(q_amp, h_phase);
  EXPECT_GT(matched_p, swapped_p);
  EXPECT_GT(matched_a, swapped_a);
  EXPECT_LE(matched_p, 1.0);
  EXPECT_GE(swapped_a, -1.0);
}

TEST(ProfileMatch, IsotropicPicturesCorrelate) {
  const DickeSpace space(50);
  const auto rho = to_density(bloch_state(kPi, 0.0, space));
  const auto h = spin_husimi(rho, BlochGridSpec{181, 360});
  const auto q = field_q(fock_state(0, FockSpace(3)), QGridSpec{-3, 3, -3, 3, 81});
  // At large S both are isotropic Gaussians centred on the origin after rescaling.
  EXPECT_GT(profile_match(q, h), 0.99);
}
