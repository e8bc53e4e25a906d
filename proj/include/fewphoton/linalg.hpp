#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Dense>

namespace fewphoton {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr double kPi = std::numbers::pi;

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

// Symmetrized product (AB + BA) / 2.
inline CMatrix sym_product(const CMatrix& a, const CMatrix& b) { return 0.5 * (a * b + b * a); }

}  // namespace fewphoton
