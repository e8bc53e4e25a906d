#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "fewphoton/error.hpp"
#include "fewphoton/linalg.hpp"
#include "fewphoton/operators.hpp"
#include "fewphoton/spaces.hpp"
#include "fewphoton/states.hpp"

namespace fewphoton {

/// Joint amplitudes regrouped per excitation sector.
class BlockedState {
 public:
  BlockedState() = default;
  BlockedState(JointSpacePtr space, std::vector<CVector> sectors) : space_(std::move(space)), sectors_(std::move(sectors)) {}

  static BlockedState from_joint(JointSpacePtr space, const CVector& joint) {
    if (joint.size() != static_cast<Eigen::Index>(space->dim()))
      throw Error(ErrorKind::DimensionMismatch, "joint vector size does not match space");
    std::vector<CVector> sectors;
    sectors.reserve(space->sector_count());
    for (const auto& sector : space->sectors()) {
      CVector v(static_cast<Eigen::Index>(sector.dim()));
      for (std::size_t p = 0; p < sector.members.size(); ++p)
        v(static_cast<Eigen::Index>(p)) = joint(static_cast<Eigen::Index>(space->index(sector.members[p].i, sector.members[p].n)));
      sectors.push_back(std::move(v));
    }
    return {std::move(space), std::move(sectors)};
  }

  CVector to_joint() const {
    CVector out(static_cast<Eigen::Index>(space_->dim()));
    for (const auto& sector : space_->sectors()) {
      const auto& v = sectors_[static_cast<std::size_t>(sector.k)];
      for (std::size_t p = 0; p < sector.members.size(); ++p)
        out(static_cast<Eigen::Index>(space_->index(sector.members[p].i, sector.members[p].n))) = v(static_cast<Eigen::Index>(p));
    }
    return out;
  }

  const JointSpacePtr& space_ptr() const noexcept { return space_; }
  const CVector& sector(int k) const { return sectors_.at(static_cast<std::size_t>(k)); }
  std::vector<CVector>& sectors() noexcept { return sectors_; }
  const std::vector<CVector>& sectors() const noexcept { return sectors_; }

  double squared_norm() const {
    double acc = 0.0;
    for (const auto& v : sectors_) acc += v.squaredNorm();
    return acc;
  }

 private:
  JointSpacePtr space_;
  std::vector<CVector> sectors_;
};

/// <psi| O |psi> summed over the operator's sector blocks.
inline Complex expectation(const BlockedOperator& op, const BlockedState& psi) {
  Complex acc{};
  for (const auto& [key, blk] : op.blocks()) acc += psi.sector(key.first).dot(blk * psi.sector(key.second));
  return acc;
}

/// Per-sector eigen-decomposition of a Hermitian BlockedOperator; evolution
/// is exact in tau: psi(tau) = V exp(-i Lambda tau) V^dag psi(0).
class SpectralPropagator {
 public:
  struct Sector {
    RVector values;
    CMatrix vectors;
  };

  explicit SpectralPropagator(const BlockedOperator& h) : space_(h.space_ptr()) {
    const auto& js = *space_;
    sectors_.resize(js.sector_count());
    for (const auto& [key, blk] : h.blocks()) {
      if (key.first != key.second)
        throw Error(ErrorKind::DimensionMismatch, "Hamiltonian couples different excitation sectors");
    }
    for (const auto& sector : js.sectors()) {
      const CMatrix* blk = h.find(sector.k, sector.k);
      const auto d = static_cast<Eigen::Index>(sector.dim());
      CMatrix block = blk ? *blk : CMatrix::Zero(d, d);
      sectors_[static_cast<std::size_t>(sector.k)] = decompose(block, sector.k);
    }
  }

  const JointSpacePtr& space_ptr() const noexcept { return space_; }
  const Sector& sector(int k) const { return sectors_.at(static_cast<std::size_t>(k)); }
  std::size_t sector_count() const noexcept { return sectors_.size(); }

  // max over sectors of ||Hv - lambda v||_inf / ||H||, and of ||V^dag V - I||_max.
  double max_residual() const noexcept { return max_residual_; }
  double max_unitarity_defect() const noexcept { return max_unitarity_; }

  /// Components of psi in the eigenbasis, reusable for any tau.
  BlockedState project(const BlockedState& psi) const {
    std::vector<CVector> coeffs(sectors_.size());
    for (std::size_t k = 0; k < sectors_.size(); ++k) coeffs[k] = sectors_[k].vectors.adjoint() * psi.sectors()[k];
    return {space_, std::move(coeffs)};
  }

  BlockedState at(const BlockedState& eigen_coeffs, double tau) const {
    std::vector<CVector> out(sectors_.size());
    for (std::size_t k = 0; k < sectors_.size(); ++k) {
      const auto& s = sectors_[k];
      const auto& c = eigen_coeffs.sectors()[k];
      CVector phased(c.size());
      for (Eigen::Index j = 0; j < c.size(); ++j) phased(j) = std::polar(1.0, -s.values(j) * tau) * c(j);
      out[k] = s.vectors * phased;
    }
    return {space_, std::move(out)};
  }

  BlockedState evolve(const BlockedState& psi, double tau) const {
    check_space(*psi.space_ptr());
    return at(project(psi), tau);
  }

  PureState evolve(const PureState& psi, double tau) const {
    if (!(psi.space == SpaceInfo::of(*space_))) throw Error(ErrorKind::DimensionMismatch, "state is not on the propagator's space");
    return {psi.space, evolve(BlockedState::from_joint(space_, psi.amplitudes), tau).to_joint(), psi.truncated_tail};
  }

  JointEnsemble evolve(const JointEnsemble& state, double tau) const {
    check_space(*state.space);
    JointEnsemble out{state.space, state.weights, {}};
    out.kets.reserve(state.kets.size());
    for (const auto& ket : state.kets) out.kets.push_back(evolve(BlockedState::from_joint(space_, ket), tau).to_joint());
    return out;
  }

  /// Dense U(tau) in the m-major joint ordering. For small spaces only.
  CMatrix dense_unitary(double tau) const {
    const auto d = static_cast<Eigen::Index>(space_->dim());
    CMatrix u = CMatrix::Zero(d, d);
    for (const auto& sector : space_->sectors()) {
      const auto& s = sectors_[static_cast<std::size_t>(sector.k)];
      CVector phases(s.values.size());
      for (Eigen::Index j = 0; j < phases.size(); ++j) phases(j) = std::polar(1.0, -s.values(j) * tau);
      const CMatrix blk = s.vectors * phases.asDiagonal() * s.vectors.adjoint();
      for (std::size_t p = 0; p < sector.members.size(); ++p)
        for (std::size_t q = 0; q < sector.members.size(); ++q)
          u(static_cast<Eigen::Index>(space_->index(sector.members[p].i, sector.members[p].n)),
            static_cast<Eigen::Index>(space_->index(sector.members[q].i, sector.members[q].n))) =
              blk(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
    }
    return u;
  }

  DensityMatrix evolve(const DensityMatrix& rho, double tau) const {
    if (!(rho.space == SpaceInfo::of(*space_))) throw Error(ErrorKind::DimensionMismatch, "state is not on the propagator's space");
    const CMatrix u = dense_unitary(tau);
    return {rho.space, u * rho.matrix * u.adjoint()};
  }

 private:
  void check_space(const JointSpace& other) const {
    if (!(other == *space_)) throw Error(ErrorKind::DimensionMismatch, "state is not on the propagator's space");
  }

  Sector decompose(const CMatrix& block, int k) {
    Sector out;
    if (block.size() == 0) return out;
    const bool real = block.imag().cwiseAbs().maxCoeff() == 0.0;
    if (real) {
      Eigen::SelfAdjointEigenSolver<RMatrix> solver(block.real());
      if (solver.info() != Eigen::Success)
        throw Error(ErrorKind::ConvergenceFailure, "eigensolver failed in sector " + std::to_string(k), std::to_string(k));
      out.values = solver.eigenvalues();
      out.vectors = solver.eigenvectors().cast<Complex>();
    } else {
      Eigen::SelfAdjointEigenSolver<CMatrix> solver(block);
      if (solver.info() != Eigen::Success)
        throw Error(ErrorKind::ConvergenceFailure, "eigensolver failed in sector " + std::to_string(k), std::to_string(k));
      out.values = solver.eigenvalues();
      out.vectors = solver.eigenvectors();
    }
    const double scale = std::max(1.0, max_abs(block));
    const CMatrix resid = block * out.vectors - out.vectors * out.values.cast<Complex>().asDiagonal();
    const double r = max_abs(resid) / scale;
    const auto d = out.vectors.cols();
    const double u = max_abs(out.vectors.adjoint() * out.vectors - CMatrix::Identity(d, d));
    if (r > 1e-10 || u > 1e-10)
      throw Error(ErrorKind::ConvergenceFailure, "eigenpair residual check failed in sector " + std::to_string(k), std::to_string(k));
    max_residual_ = std::max(max_residual_, r);
    max_unitarity_ = std::max(max_unitarity_, u);
    return out;
  }

  JointSpacePtr space_;
  std::vector<Sector> sectors_;
  double max_residual_ = 0.0;
  double max_unitarity_ = 0.0;
};

inline SpectralPropagator diagonalize(const BlockedOperator& h) { return SpectralPropagator(h); }

/// Expectations of Hermitian (or not) observables along a tau grid, and
/// symmetrized covariances of requested pairs.
struct ObservableSeries {
  std::vector<double> tau;
  std::vector<std::string> names;
  std::vector<std::vector<Complex>> values;  // values[observable][tau index]
  std::string initial_state_id;

  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return j;
    throw Error(ErrorKind::DimensionMismatch, "no observable named " + name);
  }
  const std::vector<Complex>& operator[](const std::string& name) const { return values[column(name)]; }
};

struct NamedObservable {
  std::string name;
  BlockedOperator op;
};

struct NamedCovariance {
  std::string name;
  BlockedOperator a, b;
};

namespace detail {

struct PreparedCovariance {
  std::string name;
  const BlockedOperator* a;
  const BlockedOperator* b;
  BlockedOperator sym;
};

}  // namespace detail

/// Mixed-state expectations are formed from ensemble-averaged moments, so
/// covariances of mixtures are exact (not averages of per-ket covariances).
inline ObservableSeries series(const SpectralPropagator& prop, const JointEnsemble& state0,
                               const std::vector<NamedObservable>& observables,
                               const std::vector<NamedCovariance>& covariances, const std::vector<double>& tau_grid,
                               std::string initial_state_id = {}) {
  std::vector<detail::PreparedCovariance> prepared;
  prepared.reserve(covariances.size());
  for (const auto& c : covariances) prepared.push_back({c.name, &c.a, &c.b, sym_product(c.a, c.b)});

  std::vector<BlockedState> coeffs;
  coeffs.reserve(state0.kets.size());
  for (const auto& ket : state0.kets) coeffs.push_back(prop.project(BlockedState::from_joint(state0.space, ket)));

  ObservableSeries out;
  out.tau = tau_grid;
  out.initial_state_id = std::move(initial_state_id);
  for (const auto& o : observables) out.names.push_back(o.name);
  for (const auto& c : covariances) out.names.push_back(c.name);
  out.values.assign(out.names.size(), std::vector<Complex>(tau_grid.size()));

  for (std::size_t t = 0; t < tau_grid.size(); ++t) {
    std::vector<Complex> means(observables.size());
    std::vector<Complex> cov_a(prepared.size()), cov_b(prepared.size()), cov_ab(prepared.size());
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      const BlockedState psi = prop.at(coeffs[j], tau_grid[t]);
      const double w = state0.weights[j];
      for (std::size_t o = 0; o < observables.size(); ++o) means[o] += w * expectation(observables[o].op, psi);
      for (std::size_t c = 0; c < prepared.size(); ++c) {
        cov_a[c] += w * expectation(*prepared[c].a, psi);
        cov_b[c] += w * expectation(*prepared[c].b, psi);
        cov_ab[c] += w * expectation(prepared[c].sym, psi);
      }
    }
    for (std::size_t o = 0; o < observables.size(); ++o) out.values[o][t] = means[o];
    for (std::size_t c = 0; c < prepared.size(); ++c)
      out.values[observables.size() + c][t] = cov_ab[c] - cov_a[c] * cov_b[c];
  }
  return out;
}

/// Residuals of the Heisenberg equations for a_phi, S_{pi/2 - phi} and Sz
/// under H = g (a S+ + a^dag S-). The a_phi identity only holds below the
/// Fock cutoff (truncated [a, a^dag] has -n_max in its last entry), so it is
/// checked on n < n_max and the full-space value is reported separately.
struct IdentityResidual {
  std::string name;
  double residual = 0.0;             // on the untruncated subspace
  double full_space_residual = 0.0;  // including the n = n_max edge
};

struct HeisenbergReport {
  int two_s = 0;
  int n_max = 0;
  double phi = 0.0;
  double coupling = 1.0;
  std::vector<IdentityResidual> identities;

  double max_residual() const {
    double r = 0.0;
    for (const auto& id : identities) r = std::max(r, id.residual);
    return r;
  }
};

/// Operators are assembled and multiplied in long double: the commutators
/// at S = 25, n_max = 60 involve intermediate entries of order 10^3, where
/// double roundoff alone is already ~10^-12.
inline HeisenbergReport check_heisenberg_identities(JointSpacePtr joint, double phi, double coupling = 1.0) {
  using Real = long double;
  using Op = BasicBlockedOperator<Real>;
  using C = std::complex<Real>;
  const auto& dicke = joint->dicke();
  const auto& fock = joint->fock();
  const int n_max = fock.n_max();
  const Real g = coupling;
  const Real ph = phi;
  const Real half_pi = std::numbers::pi_v<Real> / 2;
  const Op h = C(g) * interaction_hamiltonian<Real>(joint);

  const auto a_phi = lift_field<Real>(joint, directional_field_op<Real>(ph, fock), true);
  const auto a_phi_q = lift_field<Real>(joint, directional_field_op<Real>(ph + half_pi, fock), true);
  const auto s_conj = lift_spin<Real>(joint, directional_spin_op<Real>(-ph + half_pi, dicke), true);
  const auto s_neg = lift_spin<Real>(joint, directional_spin_op<Real>(-ph, dicke), true);
  const auto sz = lift_spin<Real>(joint, build_spin_matrices<Real>(dicke).sz, true);

  const auto at_cutoff = [n_max](int, int n) { return n == n_max; };
  const auto residual = [&](std::string name, const Op& lhs, const Op& rhs) {
    const auto diff = lhs - rhs;
    return IdentityResidual{std::move(name), static_cast<double>(diff.max_abs(at_cutoff)),
                            static_cast<double>(diff.max_abs())};
  };

  const C i(0, 1);
  HeisenbergReport report{dicke.two_s(), n_max, phi, coupling, {}};
  report.identities.push_back(residual("d a_phi/dt = -g S_{-phi+pi/2}", i * commutator(h, a_phi), C(-g) * s_conj));
  report.identities.push_back(
      residual("d S_{-phi+pi/2}/dt = -2g a_phi Sz", i * commutator(h, s_conj), C(-2 * g) * sym_product(a_phi, sz)));
  report.identities.push_back(residual("d Sz/dt = 2g (a_phi S_{-phi+pi/2} + a_{phi+pi/2} S_{-phi})",
                                       i * commutator(h, sz),
                                       C(2 * g) * (sym_product(a_phi, s_conj) + sym_product(a_phi_q, s_neg))));
  return report;
}

/// Finite-difference check of the variance equations of motion:
///   d Var(a_phi)/dtau   = -2 Cov(a_phi, S')
///   d^2 Var(a_phi)/dtau^2 = 4 Cov(a_phi, a_phi Sz) + 2 Var(S'),  S' = S_{-phi+pi/2}.
struct VarianceDynamicsReport {
  double tau = 0.0, dtau = 0.0, phi = 0.0;
  double variance = 0.0;
  double fd_first = 0.0, rhs_first = 0.0;
  double fd_second = 0.0, rhs_second = 0.0;
  double richardson_first = 0.0, richardson_second = 0.0;
  // With a vacuum field at tau = 0 the second-derivative rhs reduces to
  // <Sz> + 2 Var(S'); recorded for comparison.
  double reduced_second_at_zero = 0.0;
  double rel_mismatch_first = 0.0, rel_mismatch_second = 0.0;
};

class VarianceDynamicsChecker {
 public:
  VarianceDynamicsChecker(const SpectralPropagator& prop, double phi) : prop_(prop), phi_(phi) {
    const auto& joint = prop.space_ptr();
    const auto& dicke = joint->dicke();
    const auto& fock = joint->fock();
    const CMatrix a_phi_f = directional_field_op(phi, fock);
    const CMatrix s_conj_m = directional_spin_op(-phi + kPi / 2, dicke);
    const CMatrix sz_m = build_spin_matrices(dicke).sz;
    a_phi_ = lift_field(joint, a_phi_f, true);
    a_phi_sq_ = lift_field(joint, a_phi_f * a_phi_f, true);
    s_conj_ = lift_spin(joint, s_conj_m, true);
    s_conj_sq_ = lift_spin(joint, s_conj_m * s_conj_m, true);
    sz_ = lift_spin(joint, sz_m, true);
    a_s_sym_ = BlockedOperator::from_product(joint, s_conj_m, a_phi_f, true);
    a_sz_ = BlockedOperator::from_product(joint, sz_m, a_phi_f, true);
    a_a_sz_ = BlockedOperator::from_product(joint, sz_m, a_phi_f * a_phi_f, true);
  }

  double variance(const JointEnsemble& state0, double tau) const {
    const auto m = moments(state0, tau);
    return m.a2 - m.a * m.a;
  }

  /// Richardson tolerance is relative to max(1, |derivative|).
  VarianceDynamicsReport check(const JointEnsemble& state0, double tau, double dtau = 1e-3,
                               double richardson_tol = 1e-4) const {
    VarianceDynamicsReport r;
    r.tau = tau;
    r.dtau = dtau;
    r.phi = phi_;
    const auto m = moments(state0, tau);
    r.variance = m.a2 - m.a * m.a;
    r.rhs_first = -2.0 * (m.as - m.a * m.s);
    r.rhs_second = 4.0 * (m.aasz - m.a * m.asz) + 2.0 * (m.s2 - m.s * m.s);
    r.reduced_second_at_zero = m.sz + 2.0 * (m.s2 - m.s * m.s);

    const auto derivatives = [&](double h) {
      const double vp = variance(state0, tau + h);
      const double vm = variance(state0, tau - h);
      return std::pair{(vp - vm) / (2 * h), (vp - 2 * r.variance + vm) / (h * h)};
    };
    const auto [d1, d2] = derivatives(dtau);
    const auto [d1h, d2h] = derivatives(dtau / 2);
    r.fd_first = d1h;
    r.fd_second = d2h;
    r.richardson_first = (4 * d1h - d1) / 3;
    r.richardson_second = (4 * d2h - d2) / 3;
    const auto off = [](double est, double refined) { return std::abs(est - refined) / std::max(1.0, std::abs(refined)); };
    if (off(d1h, r.richardson_first) > richardson_tol || off(d2h, r.richardson_second) > richardson_tol) {
      throw Error(ErrorKind::StepTooLarge, "finite-difference step too large for the Richardson check (dtau=" +
                                               std::to_string(dtau) + ")");
    }
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    r.rel_mismatch_first = rel(r.richardson_first, r.rhs_first);
    r.rel_mismatch_second = rel(r.richardson_second, r.rhs_second);
    return r;
  }

 private:
  struct Moments {
    double a = 0, a2 = 0, s = 0, s2 = 0, as = 0, sz = 0, asz = 0, aasz = 0;
  };

  Moments moments(const JointEnsemble& state0, double tau) const {
    Moments m;
    for (std::size_t j = 0; j < state0.kets.size(); ++j) {
      const auto psi = prop_.evolve(BlockedState::from_joint(state0.space, state0.kets[j]), tau);
      const double w = state0.weights[j];
      m.a += w * expectation(a_phi_, psi).real();
      m.a2 += w * expectation(a_phi_sq_, psi).real();
      m.s += w * expectation(s_conj_, psi).real();
      m.s2 += w * expectation(s_conj_sq_, psi).real();
      m.as += w * expectation(a_s_sym_, psi).real();
      m.sz += w * expectation(sz_, psi).real();
      m.asz += w * expectation(a_sz_, psi).real();
      m.aasz += w * expectation(a_a_sz_, psi).real();
    }
    return m;
  }

  const SpectralPropagator& prop_;
  double phi_;
  BlockedOperator a_phi_{nullptr}, a_phi_sq_{nullptr}, s_conj_{nullptr}, s_conj_sq_{nullptr}, sz_{nullptr},
      a_s_sym_{nullptr}, a_sz_{nullptr}, a_a_sz_{nullptr};
};

inline VarianceDynamicsReport check_variance_dynamics(const SpectralPropagator& prop, const JointEnsemble& state0,
                                                      double phi, double tau, double dtau = 1e-3) {
  return VarianceDynamicsChecker(prop, phi).check(state0, tau, dtau);
}

}  // namespace fewphoton
