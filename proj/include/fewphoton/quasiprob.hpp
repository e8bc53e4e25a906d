#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fewphoton/error.hpp"
#include "fewphoton/linalg.hpp"
#include "fewphoton/operators.hpp"
#include "fewphoton/states.hpp"

namespace fewphoton {

struct QGridSpec {
  double re_min = -3, re_max = 3, im_min = -3, im_max = 3;
  int points = 201;  // per axis

  /// Square window |Re a|, |Im a| <= sqrt(2S) + 3.
  static QGridSpec for_atoms(int num_atoms, int points = 201) {
    const double half = std::sqrt(static_cast<double>(num_atoms)) + 3.0;
    return {-half, half, -half, half, points};
  }
  double re(int j) const { return re_min + (re_max - re_min) * j / (points - 1); }
  double im(int j) const { return im_min + (im_max - im_min) * j / (points - 1); }
  double cell_area() const { return (re_max - re_min) / (points - 1) * (im_max - im_min) / (points - 1); }
};

/// Q(alpha) samples; values(row, col) with row = Im index, col = Re index.
struct QGrid {
  QGridSpec spec;
  RMatrix values;

  double integral() const {
    // Trapezoid weights along both axes.
    double acc = 0.0;
    const int n = spec.points;
    for (int r = 0; r < n; ++r) {
      const double wr = (r == 0 || r == n - 1) ? 0.5 : 1.0;
      for (int c = 0; c < n; ++c) {
        const double wc = (c == 0 || c == n - 1) ? 0.5 : 1.0;
        acc += wr * wc * values(r, c);
      }
    }
    return acc * spec.cell_area();
  }
};

/// Q(alpha) = <alpha| rho_field |alpha> / pi, from the reduced field state.
/// Coherent overlaps are exact (log-factorial accumulation), so the only
/// cutoff requirement is that the state itself is not truncation-limited:
/// its population of the top Fock level must stay below `edge_tol`.
inline QGrid field_q(const DensityMatrix& rho_field, const QGridSpec& spec, double edge_tol = 1e-10) {
  if (rho_field.space.tag != SpaceTag::Fock) throw Error(ErrorKind::DimensionMismatch, "field_q needs a field state");
  if (spec.points < 2) throw Error(ErrorKind::GridMismatch, "grid needs at least two points per axis");
  const int n_max = rho_field.space.n_max;
  const double edge = rho_field.matrix(n_max, n_max).real();
  if (n_max > 0 && edge > edge_tol)
    throw Error(ErrorKind::CutoffTooSmall, "field population at the Fock cutoff is " + std::to_string(edge));

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(0.5 * (rho_field.matrix + rho_field.matrix.adjoint()));
  std::vector<double> w;
  std::vector<CVector> v;
  for (Eigen::Index j = 0; j < solver.eigenvalues().size(); ++j) {
    if (solver.eigenvalues()(j) <= 1e-16) continue;
    w.push_back(solver.eigenvalues()(j));
    v.push_back(solver.eigenvectors().col(j));
  }

  QGrid out{spec, RMatrix::Zero(spec.points, spec.points)};
  for (int r = 0; r < spec.points; ++r) {
    for (int c = 0; c < spec.points; ++c) {
      const CVector coh = coherent_amplitudes({spec.re(c), spec.im(r)}, n_max);
      double acc = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) acc += w[j] * std::norm(coh.dot(v[j]));
      out.values(r, c) = acc / kPi;
    }
  }
  return out;
}

inline QGrid field_q(const JointEnsemble& joint, const QGridSpec& spec, double edge_tol = 1e-10) {
  return field_q(partial_trace(joint, Keep::Field), spec, edge_tol);
}

inline QGrid field_q(const PureState& state, const QGridSpec& spec, double edge_tol = 1e-10) {
  if (state.space.tag == SpaceTag::Joint) return field_q(partial_trace(state, Keep::Field), spec, edge_tol);
  return field_q(to_density(state), spec, edge_tol);
}

struct BlochGridSpec {
  int theta_points = 181;  // theta in [0, pi], endpoints included
  int phi_points = 361;    // phi in [0, 2 pi), periodic

  double theta(int j) const { return kPi * j / (theta_points - 1); }
  double phi(int l) const { return 2 * kPi * l / phi_points; }
};

/// <theta, phi| rho_atom |theta, phi> on the sphere; values(theta idx, phi idx).
struct BlochGrid {
  BlochGridSpec spec;
  int two_s = 0;
  RMatrix values;

  /// (2S+1)/(4 pi) times the surface integral; 1 for any normalized state.
  double resolution_of_identity() const {
    const double dtheta = kPi / (spec.theta_points - 1);
    const double dphi = 2 * kPi / spec.phi_points;
    double acc = 0.0;
    for (int j = 0; j < spec.theta_points; ++j) {
      const double wt = (j == 0 || j == spec.theta_points - 1) ? 0.5 : 1.0;
      acc += wt * std::sin(spec.theta(j)) * values.row(j).sum();
    }
    return (two_s + 1) / (4 * kPi) * acc * dtheta * dphi;
  }
};

/// Uses e^{-i phi Sz} being diagonal: for fixed theta the overlap is a short
/// Fourier series in phi with coefficients from the diagonals of rho.
inline BlochGrid spin_husimi(const DensityMatrix& rho_atom, const BlochGridSpec& spec) {
  if (rho_atom.space.tag != SpaceTag::Dicke) throw Error(ErrorKind::DimensionMismatch, "spin_husimi needs an atomic state");
  const DickeSpace space(rho_atom.space.two_s);
  const SpinRotator rotator(space);
  const int d = static_cast<int>(space.dim());
  BlochGrid out{spec, space.two_s(), RMatrix::Zero(spec.theta_points, spec.phi_points)};
  std::vector<Complex> coeff(2 * d - 1);
  for (int j = 0; j < spec.theta_points; ++j) {
    const CVector col = rotator.about_y(spec.theta(j)).col(d - 1);
    std::fill(coeff.begin(), coeff.end(), Complex{});
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) coeff[static_cast<std::size_t>(i - k + d - 1)] += std::conj(col(i)) * rho_atom.matrix(i, k) * col(k);
    for (int l = 0; l < spec.phi_points; ++l) {
      const double phi = spec.phi(l);
      Complex acc{};
      for (int delta = -(d - 1); delta <= d - 1; ++delta) acc += coeff[static_cast<std::size_t>(delta + d - 1)] * std::polar(1.0, phi * delta);
      out.values(j, l) = acc.real();
    }
  }
  return out;
}

/// How spin-plane coordinates map onto the field plane. Default:
/// Sx -> -Im alpha, Sy -> -Re alpha, viewed from the -z pole.
struct ProfileMapping {
  double re_from_sy = -1.0;
  double im_from_sx = -1.0;
  bool view_from_south = true;
};

namespace detail {

inline double bilinear_on_sphere(const BlochGrid& g, double theta, double phi) {
  const auto& s = g.spec;
  const double ft = std::clamp(theta / kPi * (s.theta_points - 1), 0.0, static_cast<double>(s.theta_points - 1));
  const int t0 = std::min(static_cast<int>(ft), s.theta_points - 2);
  const double at = ft - t0;
  double fp = phi / (2 * kPi) * s.phi_points;
  fp = std::fmod(fp, static_cast<double>(s.phi_points));
  if (fp < 0) fp += s.phi_points;
  const int p0 = static_cast<int>(fp) % s.phi_points;
  const int p1 = (p0 + 1) % s.phi_points;
  const double ap = fp - std::floor(fp);
  const auto v = [&](int t, int p) { return g.values(t, p); };
  return (1 - at) * ((1 - ap) * v(t0, p0) + ap * v(t0, p1)) + at * ((1 - ap) * v(t0 + 1, p0) + ap * v(t0 + 1, p1));
}

struct PlaneMoments {
  double mx = 0, my = 0, rms = 0, mass = 0;
};

}  // namespace detail

/// Normalized cross-correlation between Q(alpha) and the atomic distribution
/// seen from the viewing pole (orthographic projection onto the Sx-Sy plane),
/// carried onto the field plane by `mapping`, then centred and rescaled so
/// both pictures share centroid and RMS radius. Returns a value in [-1, 1].
inline double profile_match(const QGrid& q, const BlochGrid& husimi, const ProfileMapping& mapping = {}) {
  if (q.spec.points < 2 || husimi.spec.theta_points < 2 || husimi.spec.phi_points < 2)
    throw Error(ErrorKind::GridMismatch, "grids are too coarse to compare");
  const double pole = mapping.view_from_south ? -1.0 : 1.0;

  // Picture moments in field-plane coordinates; projected area element is
  // |cos theta| sin theta dtheta dphi.
  detail::PlaneMoments h;
  double sxx = 0, syy = 0;
  for (int j = 0; j < husimi.spec.theta_points; ++j) {
    const double th = husimi.spec.theta(j);
    if (std::cos(th) * pole <= 0) continue;
    const double area = std::abs(std::cos(th)) * std::sin(th);
    for (int l = 0; l < husimi.spec.phi_points; ++l) {
      const double ph = husimi.spec.phi(l);
      const double x = mapping.re_from_sy * std::sin(th) * std::sin(ph);
      const double y = mapping.im_from_sx * std::sin(th) * std::cos(ph);
      const double w = husimi.values(j, l) * area;
      h.mass += w;
      h.mx += w * x;
      h.my += w * y;
      sxx += w * x * x;
      syy += w * y * y;
    }
  }
  if (!(h.mass > 0)) throw Error(ErrorKind::GridMismatch, "atomic distribution has no weight on the viewing hemisphere");
  h.mx /= h.mass;
  h.my /= h.mass;
  h.rms = std::sqrt(std::max(0.0, sxx / h.mass - h.mx * h.mx + syy / h.mass - h.my * h.my));

  detail::PlaneMoments f;
  sxx = syy = 0;
  for (int r = 0; r < q.spec.points; ++r) {
    for (int c = 0; c < q.spec.points; ++c) {
      const double w = q.values(r, c);
      const double x = q.spec.re(c), y = q.spec.im(r);
      f.mass += w;
      f.mx += w * x;
      f.my += w * y;
      sxx += w * x * x;
      syy += w * y * y;
    }
  }
  if (!(f.mass > 0)) throw Error(ErrorKind::GridMismatch, "Q grid carries no weight");
  f.mx /= f.mass;
  f.my /= f.mass;
  f.rms = std::sqrt(std::max(0.0, sxx / f.mass - f.mx * f.mx + syy / f.mass - f.my * f.my));
  if (!(f.rms > 0) || !(h.rms > 0)) throw Error(ErrorKind::GridMismatch, "degenerate distribution width");

  const double scale = h.rms / f.rms;
  const int n = q.spec.points;
  RMatrix picture = RMatrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double x = h.mx + (q.spec.re(c) - f.mx) * scale;
      const double y = h.my + (q.spec.im(r) - f.my) * scale;
      const double sy = x / mapping.re_from_sy;
      const double sx = y / mapping.im_from_sx;
      const double rho2 = sx * sx + sy * sy;
      if (rho2 >= 1.0) continue;
      const double polar = std::asin(std::sqrt(rho2));
      const double theta = mapping.view_from_south ? kPi - polar : polar;
      picture(r, c) = detail::bilinear_on_sphere(husimi, theta, std::atan2(sy, sx));
    }
  }
  const RMatrix qa = q.values.array() - q.values.mean();
  const RMatrix pa = picture.array() - picture.mean();
  const double denom = std::sqrt(qa.squaredNorm() * pa.squaredNorm());
  if (!(denom > 0)) throw Error(ErrorKind::GridMismatch, "constant picture, correlation undefined");
  return (qa.array() * pa.array()).sum() / denom;
}

}  // namespace fewphoton
