#pragma once

#include <cmath>
#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "fewphoton/error.hpp"
#include "fewphoton/linalg.hpp"
#include "fewphoton/operators.hpp"
#include "fewphoton/spaces.hpp"

namespace fewphoton {

enum class SpaceTag { Dicke, Fock, Joint };

inline std::string_view to_string(SpaceTag tag) {
  switch (tag) {
    case SpaceTag::Dicke: return "dicke";
    case SpaceTag::Fock: return "fock";
    case SpaceTag::Joint: return "joint";
  }
  return "?";
}

struct SpaceInfo {
  SpaceTag tag = SpaceTag::Dicke;
  int two_s = 0;  // meaningful for Dicke and Joint
  int n_max = 0;  // meaningful for Fock and Joint

  static SpaceInfo of(const DickeSpace& s) { return {SpaceTag::Dicke, s.two_s(), 0}; }
  static SpaceInfo of(const FockSpace& f) { return {SpaceTag::Fock, 0, f.n_max()}; }
  static SpaceInfo of(const JointSpace& j) { return {SpaceTag::Joint, j.dicke().two_s(), j.fock().n_max()}; }

  std::size_t dim() const noexcept {
    const auto spin_dim = static_cast<std::size_t>(two_s) + 1;
    const auto field_dim = static_cast<std::size_t>(n_max) + 1;
    switch (tag) {
      case SpaceTag::Dicke: return spin_dim;
      case SpaceTag::Fock: return field_dim;
      case SpaceTag::Joint: return spin_dim * field_dim;
    }
    return 0;
  }
  friend bool operator==(const SpaceInfo&, const SpaceInfo&) = default;
};

struct PureState {
  SpaceInfo space;
  CVector amplitudes;
  // Probability discarded when the state was truncated (then renormalized).
  double truncated_tail = 0.0;

  double norm() const { return amplitudes.norm(); }
};

struct DensityMatrix {
  SpaceInfo space;
  CMatrix matrix;

  double trace() const { return matrix.trace().real(); }
  double purity() const { return (matrix * matrix).trace().real(); }
  double hermiticity_defect() const { return max_abs(matrix - matrix.adjoint()); }
  RVector eigenvalues() const { return Eigen::SelfAdjointEigenSolver<CMatrix>(matrix, Eigen::EigenvaluesOnly).eigenvalues(); }
};

/// Convex mixture of joint kets. Used where a dense joint density matrix
/// would be too large (mixed atoms times a pure field).
struct JointEnsemble {
  JointSpacePtr space;
  std::vector<double> weights;
  std::vector<CVector> kets;
};

enum class Keep { Atom, Field };

inline DensityMatrix to_density(const PureState& psi) {
  return {psi.space, psi.amplitudes * psi.amplitudes.adjoint()};
}

inline PureState dicke_basis_state(int i, const DickeSpace& space) {
  CVector v = CVector::Zero(static_cast<Eigen::Index>(space.dim()));
  v(i) = 1.0;
  return {SpaceInfo::of(space), std::move(v), 0.0};
}

inline PureState fock_state(int n, const FockSpace& space) {
  if (n < 0 || n > space.n_max()) throw Error(ErrorKind::CutoffTooSmall, "Fock level outside cutoff");
  CVector v = CVector::Zero(static_cast<Eigen::Index>(space.dim()));
  v(n) = 1.0;
  return {SpaceInfo::of(space), std::move(v), 0.0};
}

/// |theta, phi> = e^{-i phi Sz} e^{-i theta Sy} |S, S>.
inline PureState bloch_state(double theta, double phi, const SpinRotator& rotator) {
  const auto& space = rotator.space();
  CVector v = rotator.rotation(theta, phi).col(static_cast<Eigen::Index>(space.dim()) - 1);
  return {SpaceInfo::of(space), std::move(v), 0.0};
}

inline PureState bloch_state(double theta, double phi, const DickeSpace& space) {
  return bloch_state(theta, phi, SpinRotator(space));
}

/// P(n > n_max) for a Poisson distribution of mean |alpha|^2.
inline double coherent_tail_mass(Complex alpha, int n_max) {
  const double mean = std::norm(alpha);
  if (mean == 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(n_max) + 1.0, mean);
}

/// Smallest n_max whose coherent tail mass is <= tail_tol.
inline int coherent_cutoff(Complex alpha, double tail_tol) {
  int n_max = static_cast<int>(std::ceil(std::norm(alpha)));
  while (coherent_tail_mass(alpha, n_max) > tail_tol) ++n_max;
  return n_max;
}

/// Coherent-state amplitudes <n|alpha>, accumulated in log space.
inline CVector coherent_amplitudes(Complex alpha, int n_max) {
  CVector c = CVector::Zero(n_max + 1);
  const double r = std::abs(alpha);
  if (r == 0.0) {
    c(0) = 1.0;
    return c;
  }
  const double log_r = std::log(r);
  const double arg = std::arg(alpha);
  for (int n = 0; n <= n_max; ++n) {
    const double log_mag = -0.5 * r * r + n * log_r - 0.5 * std::lgamma(n + 1.0);
    c(n) = std::polar(std::exp(log_mag), n * arg);
  }
  return c;
}

inline PureState coherent_state(Complex alpha, const FockSpace& space, double tail_tol = 1e-12) {
  const double tail = coherent_tail_mass(alpha, space.n_max());
  if (tail > tail_tol) {
    throw Error(ErrorKind::CutoffTooSmall,
                "coherent tail mass " + std::to_string(tail) + " exceeds tolerance at n_max=" +
                    std::to_string(space.n_max()));
  }
  CVector c = coherent_amplitudes(alpha, space.n_max());
  c /= c.norm();
  return {SpaceInfo::of(space), std::move(c), tail};
}

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::DimensionMismatch, what);
}

inline CVector kron(const CVector& spin, const CVector& field) {
  CVector out(spin.size() * field.size());
  for (Eigen::Index i = 0; i < spin.size(); ++i) out.segment(i * field.size(), field.size()) = spin(i) * field;
  return out;
}

inline CMatrix kron(const CMatrix& spin, const CMatrix& field) {
  const auto fr = field.rows(), fc = field.cols();
  CMatrix out(spin.rows() * fr, spin.cols() * fc);
  for (Eigen::Index i = 0; i < spin.rows(); ++i)
    for (Eigen::Index j = 0; j < spin.cols(); ++j) out.block(i * fr, j * fc, fr, fc) = spin(i, j) * field;
  return out;
}

inline SpaceInfo joint_info(const SpaceInfo& spin, const SpaceInfo& field) {
  require(spin.tag == SpaceTag::Dicke, "first factor must live on a Dicke space");
  require(field.tag == SpaceTag::Fock, "second factor must live on a Fock space");
  return {SpaceTag::Joint, spin.two_s, field.n_max};
}

}  // namespace detail

inline PureState product_state(const PureState& spin, const PureState& field) {
  const auto info = detail::joint_info(spin.space, field.space);
  detail::require(spin.amplitudes.size() == static_cast<Eigen::Index>(spin.space.dim()), "spin amplitudes size");
  detail::require(field.amplitudes.size() == static_cast<Eigen::Index>(field.space.dim()), "field amplitudes size");
  return {info, detail::kron(spin.amplitudes, field.amplitudes), spin.truncated_tail + field.truncated_tail};
}

inline DensityMatrix product_state(const DensityMatrix& spin, const DensityMatrix& field) {
  const auto info = detail::joint_info(spin.space, field.space);
  return {info, detail::kron(spin.matrix, field.matrix)};
}

inline DensityMatrix product_state(const DensityMatrix& spin, const PureState& field) {
  return product_state(spin, to_density(field));
}

inline DensityMatrix product_state(const PureState& spin, const DensityMatrix& field) {
  return product_state(to_density(spin), field);
}

/// Mixed atoms times a pure field, kept as an ensemble of joint kets built
/// from the eigen-decomposition of the atomic state. Eigenvalues <= 0 (which
/// can only come from roundoff) are dropped.
inline JointEnsemble product_ensemble(const DensityMatrix& spin, const PureState& field, JointSpacePtr space) {
  const auto info = detail::joint_info(spin.space, field.space);
  detail::require(info == SpaceInfo::of(*space), "joint space does not match factors");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (spin.matrix + spin.matrix.adjoint()));
  JointEnsemble out{std::move(space), {}, {}};
  for (Eigen::Index j = solver.eigenvalues().size() - 1; j >= 0; --j) {
    const double w = solver.eigenvalues()(j);
    if (w <= 0.0) continue;
    out.weights.push_back(w);
    out.kets.push_back(detail::kron(solver.eigenvectors().col(j), field.amplitudes));
  }
  return out;
}

inline JointEnsemble as_ensemble(const PureState& joint, JointSpacePtr space) {
  detail::require(joint.space == SpaceInfo::of(*space), "state does not live on this joint space");
  return {std::move(space), {1.0}, {joint.amplitudes}};
}

namespace detail {

// Amplitudes as a (spin dim) x (field dim) matrix: psi(i, n).
inline Eigen::Map<const CMatrix> as_grid(const CVector& v, const SpaceInfo& info) {
  return {v.data(), static_cast<Eigen::Index>(info.n_max) + 1, static_cast<Eigen::Index>(info.two_s) + 1};
}

inline DensityMatrix reduce_ket(const CVector& v, const SpaceInfo& info, Keep keep) {
  // Column-major map gives M(n, i) = psi(i, n).
  const auto m = as_grid(v, info);
  if (keep == Keep::Atom) {
    CMatrix rho = m.transpose() * m.conjugate();  // rho(i, i') = sum_n psi(i,n) conj(psi(i',n))
    return {{SpaceTag::Dicke, info.two_s, 0}, std::move(rho)};
  }
  CMatrix rho = m * m.adjoint();  // rho(n, n') = sum_i psi(i,n) conj(psi(i,n'))
  return {{SpaceTag::Fock, 0, info.n_max}, std::move(rho)};
}

}  // namespace detail

inline DensityMatrix partial_trace(const PureState& joint, Keep keep) {
  detail::require(joint.space.tag == SpaceTag::Joint, "partial trace needs a joint state");
  return detail::reduce_ket(joint.amplitudes, joint.space, keep);
}

inline DensityMatrix partial_trace(const DensityMatrix& joint, Keep keep) {
  detail::require(joint.space.tag == SpaceTag::Joint, "partial trace needs a joint state");
  const auto ds = static_cast<Eigen::Index>(joint.space.two_s) + 1;
  const auto df = static_cast<Eigen::Index>(joint.space.n_max) + 1;
  if (keep == Keep::Atom) {
    CMatrix rho = CMatrix::Zero(ds, ds);
    for (Eigen::Index i = 0; i < ds; ++i)
      for (Eigen::Index j = 0; j < ds; ++j) rho(i, j) = joint.matrix.block(i * df, j * df, df, df).trace();
    return {{SpaceTag::Dicke, joint.space.two_s, 0}, std::move(rho)};
  }
  CMatrix rho = CMatrix::Zero(df, df);
  for (Eigen::Index i = 0; i < ds; ++i) rho += joint.matrix.block(i * df, i * df, df, df);
  return {{SpaceTag::Fock, 0, joint.space.n_max}, std::move(rho)};
}

inline DensityMatrix partial_trace(const JointEnsemble& joint, Keep keep) {
  const auto info = SpaceInfo::of(*joint.space);
  DensityMatrix out{};
  for (std::size_t j = 0; j < joint.kets.size(); ++j) {
    auto part = detail::reduce_ket(joint.kets[j], info, keep);
    if (j == 0) {
      out.space = part.space;
      out.matrix = joint.weights[j] * part.matrix;
    } else {
      out.matrix += joint.weights[j] * part.matrix;
    }
  }
  return out;
}

inline Complex expectation(const CMatrix& op, const PureState& psi) {
  detail::require(op.rows() == psi.amplitudes.size() && op.cols() == psi.amplitudes.size(), "operator/state size");
  return psi.amplitudes.dot(op * psi.amplitudes);
}

inline Complex expectation(const CMatrix& op, const DensityMatrix& rho) {
  detail::require(op.rows() == rho.matrix.rows() && op.cols() == rho.matrix.cols(), "operator/state size");
  return (rho.matrix * op).trace();
}

/// Symmetrized covariance (<dA dB + dB dA>) / 2, real part.
template <typename State>
double covariance_sym(const CMatrix& a, const CMatrix& b, const State& state) {
  const Complex ea = expectation(a, state);
  const Complex eb = expectation(b, state);
  const Complex second = expectation(sym_product(a, b), state);
  return (second - ea * eb).real();
}

template <typename State>
double variance(const CMatrix& a, const State& state) {
  return covariance_sym(a, a, state);
}

struct SpinVector {
  double sx = 0.0, sy = 0.0, sz = 0.0;
  Vec3 vec() const { return {sx, sy, sz}; }
  double magnitude() const { return std::sqrt(sx * sx + sy * sy + sz * sz); }
};

/// First and symmetrized second moments of (Sx, Sy, Sz).
struct SpinMoments {
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Zero();
  double spin = 0.0;

  SpinVector mean_spin() const { return {mean(0), mean(1), mean(2)}; }
  double variance_along(const Vec3& u) const { return u.dot(covariance * u); }
};

inline SpinMoments spin_moments(const DensityMatrix& rho) {
  detail::require(rho.space.tag == SpaceTag::Dicke, "spin moments need an atomic state");
  const DickeSpace space(rho.space.two_s);
  const auto s = build_spin_matrices(space);
  const CMatrix* ops[3] = {&s.sx, &s.sy, &s.sz};
  SpinMoments out;
  out.spin = space.spin();
  for (int a = 0; a < 3; ++a) out.mean(a) = expectation(*ops[a], rho).real();
  for (int a = 0; a < 3; ++a) {
    for (int b = a; b < 3; ++b) {
      const double c = expectation(sym_product(*ops[a], *ops[b]), rho).real() - out.mean(a) * out.mean(b);
      out.covariance(a, b) = c;
      out.covariance(b, a) = c;
    }
  }
  return out;
}

inline SpinVector mean_spin(const DensityMatrix& rho) { return spin_moments(rho).mean_spin(); }

/// rho -> U rho U^dag on the atomic space.
inline DensityMatrix rotate(const DensityMatrix& rho, const CMatrix& u) {
  detail::require(u.rows() == rho.matrix.rows(), "rotation size");
  return {rho.space, u * rho.matrix * u.adjoint()};
}

}  // namespace fewphoton
