#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fewphoton/dynamics.hpp"
#include "fewphoton/operators.hpp"
#include "fewphoton/states.hpp"

namespace fewphoton {

/// Field quadrature statistics from the moments <a>, <a^2> and
/// <a a^dag + a^dag a>:
///   Var(a_phi) = C/4 - |A|^2/2 + Re((B - A^2) e^{-2 i phi}) / 2.
struct FieldMoments {
  Complex a{};        // <a>
  Complex a2{};       // <a^2>
  double sym_n = 0;   // <a a^dag + a^dag a>

  double mean_quadrature(double phi) const { return (a * std::polar(1.0, -phi)).real(); }
  double variance(double phi) const {
    return sym_n / 4 - std::norm(a) / 2 + 0.5 * ((a2 - a * a) * std::polar(1.0, -2 * phi)).real();
  }
  double min_variance() const { return sym_n / 4 - std::norm(a) / 2 - 0.5 * std::abs(a2 - a * a); }
  double max_variance() const { return sym_n / 4 - std::norm(a) / 2 + 0.5 * std::abs(a2 - a * a); }
  // Quadrature angle of the minimum.
  double min_variance_phi() const { return 0.5 * (std::arg(a2 - a * a) + kPi); }
  double radial_phi() const { return std::arg(a); }
  double radial_variance() const { return variance(radial_phi()); }
  double tangential_variance() const { return variance(radial_phi() + kPi / 2); }
};

struct RadiationSeries {
  ObservableSeries raw;
  bool has_spin_covariance = false;

  std::size_t size() const { return raw.tau.size(); }
  const std::vector<double>& tau() const { return raw.tau; }

  FieldMoments field(std::size_t t) const {
    return {raw["a"][t], raw["a2"][t], (raw["ada"][t] + raw["aad"][t]).real()};
  }
  Vec3 mean_spin(std::size_t t) const { return {raw["sx"][t].real(), raw["sy"][t].real(), raw["sz"][t].real()}; }
  // Angle between the mean spin and the -z axis.
  double theta_from_south(std::size_t t) const {
    const Vec3 s = mean_spin(t);
    const double len = s.norm();
    return len == 0.0 ? 0.0 : std::acos(std::clamp(-s(2) / len, -1.0, 1.0));
  }
};

/// Stage-3 engine: atoms radiating into an initially empty cavity. The Fock
/// cutoff is 2S + 1: a vacuum start never populates more than 2S photons, and
/// the extra level keeps <a a^dag> free of truncation error.
///
/// Apart from H every recorded observable acts on one subsystem only, so the
/// series is built from the reduced atom and field states at each tau.
class Radiator {
 public:
  explicit Radiator(int num_atoms)
      : space_(JointSpace::make(num_atoms, num_atoms + 1)),
        h_(interaction_hamiltonian(space_)),
        prop_(h_),
        spin_(build_spin_matrices(space_->dicke())),
        field_(build_field_matrices(space_->fock())) {}

  const JointSpacePtr& space() const noexcept { return space_; }
  const BlockedOperator& hamiltonian() const noexcept { return h_; }
  const SpectralPropagator& propagator() const noexcept { return prop_; }

  JointEnsemble initial_state(const DensityMatrix& rho_atom) const {
    if (rho_atom.space.tag != SpaceTag::Dicke || rho_atom.space.two_s != space_->dicke().two_s())
      throw Error(ErrorKind::DimensionMismatch, "atomic state does not match the radiator's atom number");
    return product_ensemble(rho_atom, fock_state(0, space_->fock()), space_);
  }

  /// Columns: a, a2, ada, aad, sx, sy, sz; with `full` also H, nexc
  /// (a^dag a + Sz + S), norm and the symmetrized spin covariances.
  RadiationSeries run(const DensityMatrix& rho_atom, const std::vector<double>& tau, bool full = true) const {
    const auto state0 = initial_state(rho_atom);
    const auto info = SpaceInfo::of(*space_);
    const auto ds = static_cast<Eigen::Index>(space_->dicke().dim());
    const auto df = static_cast<Eigen::Index>(space_->fock().dim());
    const double s = space_->dicke().spin();

    std::vector<BlockedState> coeffs;
    coeffs.reserve(state0.kets.size());
    for (const auto& ket : state0.kets) coeffs.push_back(prop_.project(BlockedState::from_joint(space_, ket)));

    RadiationSeries out;
    out.has_spin_covariance = full;
    auto& raw = out.raw;
    raw.tau = tau;
    raw.initial_state_id = "rho_atom x vacuum";
    raw.names = {"a", "a2", "ada", "aad", "sx", "sy", "sz"};
    if (full) {
      for (const char* n : {"H", "nexc", "norm", "var_sx", "var_sy", "var_sz", "cov_sxsy", "cov_sxsz", "cov_sysz"})
        raw.names.emplace_back(n);
    }
    raw.values.assign(raw.names.size(), std::vector<Complex>(tau.size()));

    const CMatrix a2 = field_.a * field_.a;
    const CMatrix ada = field_.a_dagger * field_.a;
    const CMatrix aad = field_.a * field_.a_dagger;
    const CMatrix* spin_ops[3] = {&spin_.sx, &spin_.sy, &spin_.sz};

    for (std::size_t t = 0; t < tau.size(); ++t) {
      CMatrix rho_a = CMatrix::Zero(ds, ds), rho_f = CMatrix::Zero(df, df);
      Complex energy{};
      for (std::size_t j = 0; j < coeffs.size(); ++j) {
        const BlockedState psi = prop_.at(coeffs[j], tau[t]);
        const CVector joint = psi.to_joint();
        const auto grid = detail::as_grid(joint, info);  // grid(n, i) = psi(i, n)
        const double w = state0.weights[j];
        rho_a.noalias() += w * (grid.transpose() * grid.conjugate());
        rho_f.noalias() += w * (grid * grid.adjoint());
        if (full) energy += w * expectation(h_, psi);
      }
      const auto tr = [](const CMatrix& rho, const CMatrix& op) { return (rho * op).trace(); };
      std::size_t c = 0;
      raw.values[c++][t] = tr(rho_f, field_.a);
      raw.values[c++][t] = tr(rho_f, a2);
      raw.values[c++][t] = tr(rho_f, ada);
      raw.values[c++][t] = tr(rho_f, aad);
      Complex mean[3];
      for (int k = 0; k < 3; ++k) raw.values[c++][t] = mean[k] = tr(rho_a, *spin_ops[k]);
      if (!full) continue;
      raw.values[c++][t] = energy;
      raw.values[c++][t] = raw.values[2][t] + mean[2] + s * rho_a.trace();
      raw.values[c++][t] = rho_a.trace();
      for (const auto [p, q] : {std::pair{0, 0}, {1, 1}, {2, 2}, {0, 1}, {0, 2}, {1, 2}})
        raw.values[c++][t] = tr(rho_a, sym_product(*spin_ops[p], *spin_ops[q])) - mean[p] * mean[q];
    }
    return out;
  }

 private:
  JointSpacePtr space_;
  BlockedOperator h_;
  SpectralPropagator prop_;
  SpinMatrices spin_;
  FieldMatrices field_;
};

}  // namespace fewphoton
