#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "fewphoton/error.hpp"
#include "fewphoton/linalg.hpp"
#include "fewphoton/radiation.hpp"
#include "fewphoton/states.hpp"

namespace fewphoton {

/// Covariance of the spin components perpendicular to the mean spin.
struct TransverseCovariance {
  SpinVector mean;
  Vec3 direction = Vec3::UnitZ();  // unit mean-spin direction
  Vec3 e1 = Vec3::UnitX(), e2 = Vec3::UnitY();
  Eigen::Matrix2d matrix = Eigen::Matrix2d::Zero();
  double lambda_min = 0.0, lambda_max = 0.0;
  Vec3 min_axis = Vec3::UnitX(), max_axis = Vec3::UnitY();  // eigen-directions in 3D
};

inline TransverseCovariance transverse_covariance(const SpinMoments& m, double eps_rel = 1e-6,
                                                  const std::optional<Vec3>& e1_hint = std::nullopt) {
  TransverseCovariance out;
  out.mean = m.mean_spin();
  const double len = m.mean.norm();
  if (len < eps_rel * m.spin)
    throw Error(ErrorKind::DegenerateMeanSpin, "mean spin length " + std::to_string(len) + " below threshold");
  out.direction = m.mean / len;

  Vec3 seed = e1_hint.value_or(std::abs(out.direction(0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  Vec3 e1 = seed - out.direction * seed.dot(out.direction);
  if (e1.norm() < 1e-8) {
    seed = std::abs(out.direction(0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    e1 = seed - out.direction * seed.dot(out.direction);
  }
  out.e1 = e1.normalized();
  out.e2 = out.direction.cross(out.e1);

  const double a = out.e1.dot(m.covariance * out.e1);
  const double b = out.e1.dot(m.covariance * out.e2);
  const double d = out.e2.dot(m.covariance * out.e2);
  out.matrix << a, b, b, d;
  const double mid = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  out.lambda_min = mid - rad;
  out.lambda_max = mid + rad;
  // Eigenvector of the smaller eigenvalue in the (e1, e2) frame.
  const double angle = 0.5 * std::atan2(2 * b, a - d) + kPi / 2;
  out.min_axis = std::cos(angle) * out.e1 + std::sin(angle) * out.e2;
  out.max_axis = out.direction.cross(out.min_axis);
  return out;
}

inline TransverseCovariance min_transverse_variance(const DensityMatrix& rho_atom, double eps_rel = 1e-6) {
  return transverse_covariance(spin_moments(rho_atom), eps_rel);
}

/// Strict inequality lhs < rhs. Cases inside the roundoff band around the
/// boundary are reported as not satisfied with `boundary` set.
struct CriterionResult {
  bool satisfied = false;
  bool boundary = false;
  double lhs = 0.0, rhs = 0.0;
  explicit operator bool() const noexcept { return satisfied; }
};

inline constexpr double kBoundaryTol = 1e-10;

inline CriterionResult strict_less(double lhs, double rhs) {
  CriterionResult r{false, false, lhs, rhs};
  if (std::abs(lhs - rhs) <= kBoundaryTol * std::max(1.0, std::abs(rhs))) {
    r.boundary = true;
    return r;
  }
  r.satisfied = lhs < rhs;
  return r;
}

/// Var(S_{-phi+pi/2}) < |<Sz>|/2 and <Sz> < 0: the a_phi quadrature of an
/// initially empty cavity starts out squeezed.
inline CriterionResult condition_field_squeeze(const SpinMoments& m, double phi) {
  const double psi = -phi + kPi / 2;
  const Vec3 u(std::cos(psi), std::sin(psi), 0.0);
  auto r = strict_less(m.variance_along(u), std::abs(m.mean(2)) / 2);
  const auto sz_neg = strict_less(m.mean(2), 0.0);
  r.boundary = r.boundary || sz_neg.boundary;
  r.satisfied = r.satisfied && sz_neg.satisfied;
  return r;
}

inline CriterionResult condition_field_squeeze(const DensityMatrix& rho_atom, double phi) {
  return condition_field_squeeze(spin_moments(rho_atom), phi);
}

/// Minimum transverse variance below |<S>|/2 (squeezing along any chosen
/// phase-space direction is then reachable by a rotation).
inline CriterionResult condition_tailor_made(const TransverseCovariance& t) {
  return strict_less(t.lambda_min, t.mean.magnitude() / 2);
}

enum class Axis { X, Y };

inline CriterionResult condition_popular(const SpinMoments& m, Axis axis) {
  const int c = axis == Axis::X ? 0 : 1;
  return strict_less(m.covariance(c, c), std::abs(m.mean(2)) / 2);
}

inline CriterionResult condition_popular(const DensityMatrix& rho_atom, Axis axis) {
  return condition_popular(spin_moments(rho_atom), axis);
}

struct FieldSqueezeEntry {
  double phi;
  CriterionResult result;
};

struct SqueezingReport {
  TransverseCovariance transverse;
  std::vector<FieldSqueezeEntry> field_squeeze;
  CriterionResult tailor_made, popular_x, popular_y;
  double zeta = 0.0;  // lambda_min / (|<S>|/2)
};

inline SqueezingReport squeezing_report(const DensityMatrix& rho_atom, const std::vector<double>& phi_grid,
                                        double eps_rel = 1e-6) {
  const auto m = spin_moments(rho_atom);
  SqueezingReport r;
  r.transverse = transverse_covariance(m, eps_rel);
  for (double phi : phi_grid) r.field_squeeze.push_back({phi, condition_field_squeeze(m, phi)});
  r.tailor_made = condition_tailor_made(r.transverse);
  r.popular_x = condition_popular(m, Axis::X);
  r.popular_y = condition_popular(m, Axis::Y);
  r.zeta = std::max(0.0, r.transverse.lambda_min) / (r.transverse.mean.magnitude() / 2);
  return r;
}

/// Large-S, small-angle solution for the radiated quadrature and the
/// conjugate spin variance, with S0 the mean-spin length.
struct ApproxVariances {
  double field_variance;
  double spin_variance;
};

inline ApproxVariances approx_variances(double s0, double var0, double tau) {
  const double w = std::sqrt(2 * s0) * tau;
  const double c2 = std::cos(w) * std::cos(w);
  const double s2 = std::sin(w) * std::sin(w);
  return {0.25 * c2 + var0 / (2 * s0) * s2, var0 * c2 + 0.5 * s0 * s2};
}

inline double approx_period(double s0) { return kPi / std::sqrt(2 * s0); }
inline double approx_min_time(double s0) { return kPi / (2 * std::sqrt(2 * s0)); }

struct ApproxComparison {
  double phi = 0.0;
  double s0 = 0.0, var0 = 0.0;
  double theta_from_south = 0.0;
  double approx_min = 0.0, approx_min_tau = 0.0, approx_period = 0.0;
  double exact_min = 0.0, exact_min_tau = 0.0;
  double exact_period = 0.0;  // time of the first maximum after the first minimum; 0 if not on the grid
  double rel_dev_at_min = 0.0;
  double max_rel_dev_first_period = 0.0;
  double max_rel_dev_spin_first_period = 0.0;
  std::vector<double> tau, exact_field, approx_field, exact_spin, approx_spin;
};

namespace detail {

// Vertex of the parabola through three equally spaced samples.
inline double parabolic_vertex(const std::vector<double>& x, const std::vector<double>& y, std::size_t i) {
  if (i == 0 || i + 1 >= y.size()) return x[i];
  const double denom = y[i - 1] - 2 * y[i] + y[i + 1];
  if (denom == 0.0) return x[i];
  const double h = x[i + 1] - x[i];
  return x[i] + 0.5 * h * (y[i - 1] - y[i + 1]) / denom;
}

}  // namespace detail

/// Exact radiated quadrature variance against the approximate solution, for
/// a prepared atomic state radiating into vacuum.
inline ApproxComparison compare_exact_vs_approx(const Radiator& radiator, const DensityMatrix& rho_atom,
                                                const std::vector<double>& tau_grid, double phi) {
  ApproxComparison c;
  c.phi = phi;
  const auto m = spin_moments(rho_atom);
  c.s0 = m.mean.norm();
  const double psi = -phi + kPi / 2;
  const Vec3 u(std::cos(psi), std::sin(psi), 0.0);
  c.var0 = m.variance_along(u);
  c.theta_from_south = c.s0 == 0.0 ? 0.0 : std::acos(std::clamp(-m.mean(2) / c.s0, -1.0, 1.0));
  c.approx_min = c.var0 / (2 * c.s0);
  c.approx_min_tau = approx_min_time(c.s0);
  c.approx_period = approx_period(c.s0);

  const auto run = radiator.run(rho_atom, tau_grid, true);
  c.tau = tau_grid;
  for (std::size_t t = 0; t < run.size(); ++t) {
    c.exact_field.push_back(run.field(t).variance(phi));
    const double vx = run.raw["var_sx"][t].real(), vy = run.raw["var_sy"][t].real();
    const double cxy = run.raw["cov_sxsy"][t].real();
    c.exact_spin.push_back(u(0) * u(0) * vx + u(1) * u(1) * vy + 2 * u(0) * u(1) * cxy);
    const auto ap = approx_variances(c.s0, c.var0, tau_grid[t]);
    c.approx_field.push_back(ap.field_variance);
    c.approx_spin.push_back(ap.spin_variance);
    if (tau_grid[t] <= c.approx_period) {
      c.max_rel_dev_first_period =
          std::max(c.max_rel_dev_first_period, std::abs(c.exact_field[t] - ap.field_variance) / ap.field_variance);
      c.max_rel_dev_spin_first_period = std::max(
          c.max_rel_dev_spin_first_period, std::abs(c.exact_spin[t] - ap.spin_variance) / std::max(ap.spin_variance, 1e-300));
    }
  }

  // First local minimum, then the first local maximum after it.
  const auto& y = c.exact_field;
  std::size_t imin = 0;
  for (std::size_t t = 1; t + 1 < y.size(); ++t) {
    if (y[t] <= y[t - 1] && y[t] < y[t + 1]) {
      imin = t;
      break;
    }
  }
  if (imin == 0) imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  c.exact_min = y[imin];
  c.exact_min_tau = detail::parabolic_vertex(tau_grid, y, imin);
  for (std::size_t t = imin + 1; t + 1 < y.size(); ++t) {
    if (y[t] >= y[t - 1] && y[t] > y[t + 1]) {
      c.exact_period = detail::parabolic_vertex(tau_grid, y, t);
      break;
    }
  }
  c.rel_dev_at_min = std::abs(c.exact_min - c.approx_min) / c.approx_min;
  return c;
}

// ---------------------------------------------------------------------------
// Experimental feasibility

inline constexpr double kPlanck = 6.62607015e-34;     // J s
inline constexpr double kBoltzmann = 1.380649e-23;    // J / K

/// Bose-Einstein mean occupation 1 / (e^{h nu / k T} - 1).
inline double thermal_occupancy(double frequency_hz, double temperature_k) {
  if (!(frequency_hz > 0) || !(temperature_k >= 0))
    throw Error(ErrorKind::Config, "frequency must be positive and temperature non-negative");
  if (temperature_k == 0.0) return 0.0;
  const double x = kPlanck * frequency_hz / (kBoltzmann * temperature_k);
  return 1.0 / std::expm1(x);
}

struct FeasibilityReport {
  double g_hz = 0, tau = 0, lifetime_s = 0, cavity_lifetime_s = 0;
  double time_s = 0;  // physical interaction time tau / g
  bool within_atomic_lifetime = false;
  bool within_cavity_lifetime = false;
  bool feasible() const { return within_atomic_lifetime && within_cavity_lifetime; }
};

inline FeasibilityReport feasibility_report(double g_hz, double tau, double lifetime_s, double cavity_lifetime_s) {
  if (!(g_hz > 0) || tau < 0 || !(lifetime_s > 0) || !(cavity_lifetime_s > 0))
    throw Error(ErrorKind::Config, "feasibility inputs must be positive");
  FeasibilityReport r{g_hz, tau, lifetime_s, cavity_lifetime_s};
  r.time_s = tau / g_hz;
  r.within_atomic_lifetime = r.time_s < lifetime_s;
  r.within_cavity_lifetime = r.time_s < cavity_lifetime_s;
  return r;
}

}  // namespace fewphoton
