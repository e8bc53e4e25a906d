#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <type_traits>
#include <utility>
#include <vector>

#include "fewphoton/error.hpp"
#include "fewphoton/linalg.hpp"
#include "fewphoton/spaces.hpp"

namespace fewphoton {

// Matrices over std::complex<Real>. Everything defaults to double; the
// operator-identity checks instantiate long double.
template <typename Real>
using ComplexMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Real = double>
struct BasicSpinMatrices {
  ComplexMatrix<Real> sx, sy, sz, splus, sminus;
};
using SpinMatrices = BasicSpinMatrices<double>;

template <typename Real = double>
BasicSpinMatrices<Real> build_spin_matrices(const DickeSpace& space) {
  using C = std::complex<Real>;
  const auto dim = static_cast<Eigen::Index>(space.dim());
  // Twice-integer arithmetic keeps S(S+1) - m(m+1) exact before the sqrt.
  const long two_s = space.two_s();
  BasicSpinMatrices<Real> out;
  out.splus = ComplexMatrix<Real>::Zero(dim, dim);
  out.sz = ComplexMatrix<Real>::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const long two_m = 2 * static_cast<long>(i) - two_s;
    out.sz(i, i) = static_cast<Real>(two_m) / 2;
    const long four_c2 = two_s * (two_s + 2) - two_m * (two_m + 2);
    if (i + 1 < dim) out.splus(i + 1, i) = std::sqrt(static_cast<Real>(four_c2)) / 2;
  }
  out.sminus = out.splus.adjoint();
  out.sx = (out.splus + out.sminus) / Real(2);
  out.sy = (out.splus - out.sminus) / C(0, 2);
  return out;
}

template <typename Real = double>
struct BasicFieldMatrices {
  ComplexMatrix<Real> a, a_dagger;
};
using FieldMatrices = BasicFieldMatrices<double>;

/// Truncated ladder operators. [a, a^dag] = 1 except for the last diagonal
/// entry, which is -n_max.
template <typename Real = double>
BasicFieldMatrices<Real> build_field_matrices(const FockSpace& space) {
  const auto dim = static_cast<Eigen::Index>(space.dim());
  BasicFieldMatrices<Real> out;
  out.a = ComplexMatrix<Real>::Zero(dim, dim);
  for (Eigen::Index n = 1; n < dim; ++n) out.a(n - 1, n) = std::sqrt(static_cast<Real>(n));
  out.a_dagger = out.a.adjoint();
  return out;
}

/// a_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2.
template <typename Real = double>
ComplexMatrix<Real> directional_field_op(Real phi, const FockSpace& space) {
  const auto f = build_field_matrices<Real>(space);
  const auto e = std::polar(Real(1), phi);
  return (f.a * std::conj(e) + f.a_dagger * e) / Real(2);
}

/// S_phi = (S+ e^{-i phi} + S- e^{i phi}) / 2 = cos(phi) Sx + sin(phi) Sy.
template <typename Real = double>
ComplexMatrix<Real> directional_spin_op(Real phi, const DickeSpace& space) {
  const auto s = build_spin_matrices<Real>(space);
  const auto e = std::polar(Real(1), phi);
  return (s.splus * std::conj(e) + s.sminus * e) / Real(2);
}

/// Collective rotations built from the spectral decomposition of Sy (Sz is
/// diagonal). Keeps the eigenvectors so repeated rotations cost O(d^2).
class SpinRotator {
 public:
  explicit SpinRotator(const DickeSpace& space) : space_(space) {
    const auto s = build_spin_matrices(space);
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(s.sy);
    sy_values_ = solver.eigenvalues();
    sy_vectors_ = solver.eigenvectors();
  }

  const DickeSpace& space() const noexcept { return space_; }

  // e^{-i theta Sy}
  CMatrix about_y(double theta) const {
    CVector phases(sy_values_.size());
    for (Eigen::Index j = 0; j < sy_values_.size(); ++j) phases(j) = std::polar(1.0, -theta * sy_values_(j));
    return sy_vectors_ * phases.asDiagonal() * sy_vectors_.adjoint();
  }

  // e^{-i phi Sz}
  CVector about_z_diagonal(double phi) const {
    CVector d(static_cast<Eigen::Index>(space_.dim()));
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = std::polar(1.0, -phi * space_.m(static_cast<std::size_t>(i)));
    return d;
  }

  /// e^{-i phi Sz} e^{-i theta Sy}
  CMatrix rotation(double theta, double phi) const { return about_z_diagonal(phi).asDiagonal() * about_y(theta); }

  /// ZYZ Euler rotation e^{-i alpha Sz} e^{-i beta Sy} e^{-i gamma Sz}. Acting
  /// on states it rotates the mean spin vector by Rz(alpha) Ry(beta) Rz(gamma).
  CMatrix euler(double alpha, double beta, double gamma) const {
    return about_z_diagonal(alpha).asDiagonal() * about_y(beta) * about_z_diagonal(gamma).asDiagonal();
  }

 private:
  DickeSpace space_;
  RVector sy_values_;
  CMatrix sy_vectors_;
};

inline CMatrix rotation_operator(double theta, double phi, const DickeSpace& space) {
  return SpinRotator(space).rotation(theta, phi);
}

struct EulerAngles {
  double alpha, beta, gamma;
};

/// ZYZ angles of a proper rotation matrix, R = Rz(alpha) Ry(beta) Rz(gamma).
inline EulerAngles euler_zyz(const Mat3& r) {
  const double beta = std::acos(std::clamp(r(2, 2), -1.0, 1.0));
  if (std::abs(std::sin(beta)) > 1e-12) {
    return {std::atan2(r(1, 2), r(0, 2)), beta, std::atan2(r(2, 1), -r(2, 0))};
  }
  if (r(2, 2) > 0) return {std::atan2(r(1, 0), r(0, 0)), 0.0, 0.0};
  return {std::atan2(-r(1, 0), -r(0, 0)), kPi, 0.0};
}

/// Operator on a JointSpace stored as dense blocks between excitation
/// sectors, keyed by (row sector, column sector). Operators that conserve
/// excitation number only have diagonal keys.
template <typename Real = double>
class BasicBlockedOperator {
 public:
  using Key = std::pair<int, int>;
  using Scalar = std::complex<Real>;
  using Matrix = ComplexMatrix<Real>;

  explicit BasicBlockedOperator(JointSpacePtr space, bool hermitian = false)
      : space_(std::move(space)), hermitian_(hermitian) {}

  /// spin (x) field, assembled straight into sector blocks.
  static BasicBlockedOperator from_product(JointSpacePtr space, const Matrix& spin, const Matrix& field,
                                           bool hermitian = false) {
    BasicBlockedOperator out(space, hermitian);
    const auto& js = *out.space_;
    if (spin.rows() != static_cast<Eigen::Index>(js.dicke().dim()) ||
        field.rows() != static_cast<Eigen::Index>(js.fock().dim())) {
      throw Error(ErrorKind::DimensionMismatch, "factor dimensions do not match joint space");
    }
    for (Eigen::Index ic = 0; ic < spin.cols(); ++ic) {
      for (Eigen::Index ir = 0; ir < spin.rows(); ++ir) {
        const Scalar s = spin(ir, ic);
        if (s == Scalar{}) continue;
        for (Eigen::Index nc = 0; nc < field.cols(); ++nc) {
          for (Eigen::Index nr = 0; nr < field.rows(); ++nr) {
            const Scalar f = field(nr, nc);
            if (f == Scalar{}) continue;
            const int i_r = static_cast<int>(ir), n_r = static_cast<int>(nr);
            const int i_c = static_cast<int>(ic), n_c = static_cast<int>(nc);
            Matrix& blk = out.block_for(js.sector_of(i_r, n_r), js.sector_of(i_c, n_c));
            blk(static_cast<Eigen::Index>(js.position_in_sector(i_r, n_r)),
                static_cast<Eigen::Index>(js.position_in_sector(i_c, n_c))) += s * f;
          }
        }
      }
    }
    return out;
  }

  static BasicBlockedOperator identity(JointSpacePtr space) {
    BasicBlockedOperator out(space, true);
    for (const auto& sector : out.space_->sectors()) {
      const auto d = static_cast<Eigen::Index>(sector.dim());
      out.blocks_[{sector.k, sector.k}] = Matrix::Identity(d, d);
    }
    return out;
  }

  const JointSpace& space() const noexcept { return *space_; }
  const JointSpacePtr& space_ptr() const noexcept { return space_; }
  bool hermitian() const noexcept { return hermitian_; }
  const std::map<Key, Matrix>& blocks() const noexcept { return blocks_; }

  const Matrix* find(int row_sector, int col_sector) const {
    auto it = blocks_.find({row_sector, col_sector});
    return it == blocks_.end() ? nullptr : &it->second;
  }

  // Zero-initialized on first access.
  Matrix& block_for(int row_sector, int col_sector) {
    auto it = blocks_.find({row_sector, col_sector});
    if (it != blocks_.end()) return it->second;
    const auto r = static_cast<Eigen::Index>(space_->sector(row_sector).dim());
    const auto c = static_cast<Eigen::Index>(space_->sector(col_sector).dim());
    return blocks_.emplace(Key{row_sector, col_sector}, Matrix::Zero(r, c)).first->second;
  }

  void set_block(int row_sector, int col_sector, Matrix block) {
    const auto& rs = space_->sector(row_sector);
    const auto& cs = space_->sector(col_sector);
    if (block.rows() != static_cast<Eigen::Index>(rs.dim()) || block.cols() != static_cast<Eigen::Index>(cs.dim())) {
      throw Error(ErrorKind::DimensionMismatch, "block shape does not match sectors");
    }
    blocks_[{row_sector, col_sector}] = std::move(block);
  }

  /// Matrix element between joint indices (m-major ordering).
  Scalar coeff(std::size_t row, std::size_t col) const {
    const auto r = space_->split(row);
    const auto c = space_->split(col);
    const Matrix* blk = find(space_->sector_of(r.i, r.n), space_->sector_of(c.i, c.n));
    if (blk == nullptr) return {};
    return (*blk)(static_cast<Eigen::Index>(space_->position_in_sector(r.i, r.n)),
                  static_cast<Eigen::Index>(space_->position_in_sector(c.i, c.n)));
  }

  Matrix to_dense() const {
    const auto d = static_cast<Eigen::Index>(space_->dim());
    Matrix out = Matrix::Zero(d, d);
    for (const auto& [key, blk] : blocks_) {
      const auto& rows = space_->sector(key.first).members;
      const auto& cols = space_->sector(key.second).members;
      for (std::size_t p = 0; p < rows.size(); ++p) {
        for (std::size_t q = 0; q < cols.size(); ++q) {
          out(static_cast<Eigen::Index>(space_->index(rows[p].i, rows[p].n)),
              static_cast<Eigen::Index>(space_->index(cols[q].i, cols[q].n))) =
              blk(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
        }
      }
    }
    return out;
  }

  BasicBlockedOperator adjoint() const {
    BasicBlockedOperator out(space_, hermitian_);
    for (const auto& [key, blk] : blocks_) out.blocks_[{key.second, key.first}] = blk.adjoint();
    return out;
  }

  /// Largest |entry| over blocks, optionally skipping joint indices for which
  /// `skip(i, n)` is true (on either the row or the column side).
  Real max_abs(const std::function<bool(int, int)>& skip = {}) const {
    Real best = 0;
    for (const auto& [key, blk] : blocks_) {
      const auto& rows = space_->sector(key.first).members;
      const auto& cols = space_->sector(key.second).members;
      for (std::size_t q = 0; q < cols.size(); ++q) {
        if (skip && skip(cols[q].i, cols[q].n)) continue;
        for (std::size_t p = 0; p < rows.size(); ++p) {
          if (skip && skip(rows[p].i, rows[p].n)) continue;
          best = std::max(best, std::abs(blk(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q))));
        }
      }
    }
    return best;
  }

  Real hermiticity_defect() const {
    Real worst = 0;
    const auto largest = [](const auto& m) { return m.size() == 0 ? Real(0) : Real(m.cwiseAbs().maxCoeff()); };
    for (const auto& [key, blk] : blocks_) {
      const Matrix* mirror = find(key.second, key.first);
      worst = std::max(worst, mirror ? largest(blk - mirror->adjoint()) : largest(blk));
    }
    return worst;
  }

  BasicBlockedOperator& operator+=(const BasicBlockedOperator& rhs) {
    check_same_space(rhs);
    for (const auto& [key, blk] : rhs.blocks_) block_for(key.first, key.second) += blk;
    hermitian_ = hermitian_ && rhs.hermitian_;
    return *this;
  }
  BasicBlockedOperator& operator-=(const BasicBlockedOperator& rhs) {
    check_same_space(rhs);
    for (const auto& [key, blk] : rhs.blocks_) block_for(key.first, key.second) -= blk;
    hermitian_ = hermitian_ && rhs.hermitian_;
    return *this;
  }
  BasicBlockedOperator& operator*=(Scalar c) {
    for (auto& [key, blk] : blocks_) blk *= c;
    hermitian_ = hermitian_ && c.imag() == Real(0);
    return *this;
  }

  friend BasicBlockedOperator operator+(BasicBlockedOperator a, const BasicBlockedOperator& b) { return a += b; }
  friend BasicBlockedOperator operator-(BasicBlockedOperator a, const BasicBlockedOperator& b) { return a -= b; }
  friend BasicBlockedOperator operator*(Scalar c, BasicBlockedOperator a) { return a *= c; }
  friend BasicBlockedOperator operator*(BasicBlockedOperator a, Scalar c) { return a *= c; }

  friend BasicBlockedOperator operator*(const BasicBlockedOperator& a, const BasicBlockedOperator& b) {
    a.check_same_space(b);
    BasicBlockedOperator out(a.space_, false);
    for (const auto& [ka, ba] : a.blocks_) {
      for (const auto& [kb, bb] : b.blocks_) {
        if (ka.second != kb.first) continue;
        out.block_for(ka.first, kb.second).noalias() += ba * bb;
      }
    }
    return out;
  }

 private:
  void check_same_space(const BasicBlockedOperator& other) const {
    if (!(*space_ == *other.space_)) throw Error(ErrorKind::DimensionMismatch, "operators live on different joint spaces");
  }

  JointSpacePtr space_;
  bool hermitian_;
  std::map<Key, Matrix> blocks_;
};

using BlockedOperator = BasicBlockedOperator<double>;

template <typename Real>
BasicBlockedOperator<Real> commutator(const BasicBlockedOperator<Real>& a, const BasicBlockedOperator<Real>& b) {
  return a * b - b * a;
}

template <typename Real>
BasicBlockedOperator<Real> sym_product(const BasicBlockedOperator<Real>& a, const BasicBlockedOperator<Real>& b) {
  return std::complex<Real>(Real(1) / 2) * (a * b + b * a);
}

/// Spin-only and field-only operators lifted to the joint space.
template <typename Real = double>
BasicBlockedOperator<Real> lift_spin(JointSpacePtr space, const std::type_identity_t<ComplexMatrix<Real>>& spin,
                                     bool hermitian = false) {
  const auto d = static_cast<Eigen::Index>(space->fock().dim());
  return BasicBlockedOperator<Real>::from_product(space, spin, ComplexMatrix<Real>::Identity(d, d), hermitian);
}
template <typename Real = double>
BasicBlockedOperator<Real> lift_field(JointSpacePtr space, const std::type_identity_t<ComplexMatrix<Real>>& field,
                                      bool hermitian = false) {
  const auto d = static_cast<Eigen::Index>(space->dicke().dim());
  return BasicBlockedOperator<Real>::from_product(space, ComplexMatrix<Real>::Identity(d, d), field, hermitian);
}

/// H = a S+ + a^dag S- in units g = hbar = 1 (time is tau = g t). Each
/// sector block is tridiagonal: (i, n) couples to (i+1, n-1) with
/// sqrt(n) * sqrt(S(S+1) - m(m+1)).
template <typename Real = double>
BasicBlockedOperator<Real> interaction_hamiltonian(JointSpacePtr space) {
  using Matrix = ComplexMatrix<Real>;
  BasicBlockedOperator<Real> h(space, true);
  const long two_s = space->dicke().two_s();
  for (const auto& sector : space->sectors()) {
    const auto d = static_cast<Eigen::Index>(sector.dim());
    Matrix blk = Matrix::Zero(d, d);
    for (Eigen::Index p = 0; p + 1 < d; ++p) {
      const auto& lo = sector.members[static_cast<std::size_t>(p)];
      const long two_m = 2L * lo.i - two_s;
      const long four_c2 = two_s * (two_s + 2) - two_m * (two_m + 2);
      const Real element = std::sqrt(static_cast<Real>(lo.n)) * std::sqrt(static_cast<Real>(four_c2)) / 2;
      blk(p + 1, p) = element;
      blk(p, p + 1) = element;
    }
    h.set_block(sector.k, sector.k, std::move(blk));
  }
  return h;
}

}  // namespace fewphoton
