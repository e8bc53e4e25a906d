#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <variant>
#include <utility>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/math/tools/minima.hpp>

#include "fewphoton/dynamics.hpp"
#include "fewphoton/error.hpp"
#include "fewphoton/operators.hpp"
#include "fewphoton/quasiprob.hpp"
#include "fewphoton/radiation.hpp"
#include "fewphoton/squeezing.hpp"
#include "fewphoton/states.hpp"

namespace fewphoton {

/// Inclusive, evenly spaced grid.
struct Range {
  double start = 0.0, stop = 0.0;
  int points = 1;

  std::vector<double> values() const {
    if (points < 1) throw Error(ErrorKind::Config, "grid needs at least one point");
    if (points == 1) return {start};
    if (!(stop > start)) throw Error(ErrorKind::Config, "grid must be strictly increasing");
    std::vector<double> v(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) v[static_cast<std::size_t>(j)] = start + (stop - start) * j / (points - 1);
    return v;
  }
};

/// Auto-orientation target: mean spin at `theta_from_south` from -z in the
/// y-z plane (positive Sy), minimum-variance axis at angle `chi` inside the
/// transverse plane measured from the x axis. chi = 0 squeezes Sx (phase
/// squeezing of the radiated field), chi = pi/2 squeezes the in-plane
/// direction (amplitude squeezing).
struct AutoOrient {
  double theta_from_south = kPi / 6;
  double chi = 0.0;

  static AutoOrient phase(double theta = kPi / 6) { return {theta, 0.0}; }
  static AutoOrient amplitude(double theta = kPi / 6) { return {theta, kPi / 2}; }
};

struct ManualRotation {
  double theta = 0.0, phi = 0.0;
};

struct PrepConfig {
  int num_atoms = 1;
  Complex alpha{1.0, 0.0};
  std::optional<Range> alpha_range;  // real amplitudes, searched
  double tau1 = 0.0;
  std::optional<Range> tau1_range;   // searched
  std::variant<ManualRotation, AutoOrient> rotation = AutoOrient{};
  std::optional<Range> tau3_grid;    // default: one analytic period, 121 points
  std::vector<double> phi_grid = {0.0, kPi / 4, kPi / 2, 3 * kPi / 4};
  std::optional<int> n_max;          // stage-1 cutoff; nullopt = auto
  std::uint64_t seed = 0;
  double tail_tol = 1e-12;
  double spin_floor_fraction = 0.4;
  bool projective = false;           // keep only the dominant eigenvector after stage 1
  double fixed_phi = kPi / 2;        // quadrature reported as "fixed" (a_2)
};

// ---------------------------------------------------------------------------
// Stage 1: excited atoms interact with a coherent field

/// Stage-1 cutoff: coherent tail below `tail_tol` plus room for all 2S
/// photons the atoms can emit.
inline int stage1_cutoff(double max_abs_alpha, int num_atoms, double tail_tol) {
  return coherent_cutoff(max_abs_alpha, tail_tol) + num_atoms;
}

class Preparer {
 public:
  Preparer(int num_atoms, int n_max)
      : space_(JointSpace::make(num_atoms, n_max)), prop_(interaction_hamiltonian(space_)) {}

  const JointSpacePtr& space() const noexcept { return space_; }
  const SpectralPropagator& propagator() const noexcept { return prop_; }

  /// Eigen-basis coefficients of |S, S> (x) |alpha>.
  BlockedState initial_coefficients(Complex alpha, double tail_tol, double* tail = nullptr) const {
    const auto& dicke = space_->dicke();
    const auto field = coherent_state(alpha, space_->fock(), tail_tol);
    if (tail) *tail = field.truncated_tail;
    const auto joint = product_state(dicke_basis_state(dicke.two_s(), dicke), field);
    return prop_.project(BlockedState::from_joint(space_, joint.amplitudes));
  }

  PureState joint_at(const BlockedState& coeffs, double tau) const {
    return {SpaceInfo::of(*space_), prop_.at(coeffs, tau).to_joint(), 0.0};
  }

  DensityMatrix reduced_at(const BlockedState& coeffs, double tau) const {
    return partial_trace(joint_at(coeffs, tau), Keep::Atom);
  }

 private:
  JointSpacePtr space_;
  SpectralPropagator prop_;
};

struct SearchSample {
  double alpha = 0.0, tau = 0.0;
  double spin_length = 0.0, lambda_min = 0.0, lambda_max = 0.0, zeta = 0.0;
};

struct Stage1Result {
  Complex alpha{};
  double tau1 = 0.0;
  int n_max = 0;
  double tail = 0.0;
  double purity = 1.0;
  DensityMatrix rho_atom;
  SqueezingReport report;
  std::vector<SearchSample> samples;  // every evaluated (alpha, tau) point
};

inline DensityMatrix dominant_component(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(rho.matrix);
  const CVector v = solver.eigenvectors().col(solver.eigenvalues().size() - 1);
  return {rho.space, v * v.adjoint()};
}

namespace detail {

inline SearchSample evaluate_sample(const DensityMatrix& rho, double alpha, double tau, double floor) {
  SearchSample s{alpha, tau};
  const auto m = spin_moments(rho);
  s.spin_length = m.mean.norm();
  s.zeta = std::numeric_limits<double>::infinity();
  if (s.spin_length < 1e-6 * m.spin) return s;
  const auto t = transverse_covariance(m);
  s.lambda_min = t.lambda_min;
  s.lambda_max = t.lambda_max;
  if (s.spin_length >= floor) s.zeta = std::max(0.0, t.lambda_min) / (s.spin_length / 2);
  return s;
}

}  // namespace detail

/// Evolves |S,S> (x) |alpha> for tau1 and traces out the field. With search
/// ranges, scans the (alpha, tau1) grid, refines tau1 around the best grid
/// point of each alpha (Brent), and keeps the state of smallest
/// zeta = lambda_min / (|<S>|/2) with |<S>| >= spin_floor_fraction * S.
inline Stage1Result stage1_prepare(const PrepConfig& cfg) {
  const DickeSpace dicke(cfg.num_atoms);
  const std::vector<double> alphas = cfg.alpha_range ? cfg.alpha_range->values() : std::vector<double>{};
  double max_alpha = std::abs(cfg.alpha);
  for (double a : alphas) max_alpha = std::max(max_alpha, std::abs(a));
  const int n_max = cfg.n_max.value_or(stage1_cutoff(max_alpha, cfg.num_atoms, cfg.tail_tol));
  const Preparer prep(cfg.num_atoms, n_max);
  const double floor = cfg.spin_floor_fraction * dicke.spin();

  Stage1Result best;
  best.n_max = n_max;
  double best_zeta = std::numeric_limits<double>::infinity();
  const auto consider = [&](Complex alpha, double tau, const BlockedState& coeffs, double tail) {
    auto rho = prep.reduced_at(coeffs, tau);
    auto sample = detail::evaluate_sample(rho, alpha.real(), tau, floor);
    best.samples.push_back(sample);
    if (sample.zeta < best_zeta || best.rho_atom.matrix.size() == 0) {
      if (sample.zeta < best_zeta) best_zeta = sample.zeta;
      best.alpha = alpha;
      best.tau1 = tau;
      best.tail = tail;
      best.rho_atom = std::move(rho);
    }
    return sample.zeta;
  };

  if (!cfg.alpha_range && !cfg.tau1_range) {
    double tail = 0.0;
    const auto coeffs = prep.initial_coefficients(cfg.alpha, cfg.tail_tol, &tail);
    consider(cfg.alpha, cfg.tau1, coeffs, tail);
  } else {
    const std::vector<Complex> alpha_values = [&] {
      std::vector<Complex> v;
      if (cfg.alpha_range) {
        for (double a : alphas) v.emplace_back(a, 0.0);
      } else {
        v.push_back(cfg.alpha);
      }
      return v;
    }();
    const std::vector<double> taus = cfg.tau1_range ? cfg.tau1_range->values() : std::vector<double>{cfg.tau1};
    for (const Complex alpha : alpha_values) {
      double tail = 0.0;
      const auto coeffs = prep.initial_coefficients(alpha, cfg.tail_tol, &tail);
      std::size_t local_best = 0;
      double local_zeta = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < taus.size(); ++t) {
        const double z = consider(alpha, taus[t], coeffs, tail);
        if (z < local_zeta) {
          local_zeta = z;
          local_best = t;
        }
      }
      if (taus.size() < 3 || !std::isfinite(local_zeta)) continue;
      const double lo = taus[local_best == 0 ? 0 : local_best - 1];
      const double hi = taus[std::min(local_best + 1, taus.size() - 1)];
      const auto objective = [&](double tau) {
        const auto rho = prep.reduced_at(coeffs, tau);
        return detail::evaluate_sample(rho, alpha.real(), tau, floor).zeta;
      };
      std::uintmax_t iterations = 60;
      const auto [tau_opt, z_opt] = boost::math::tools::brent_find_minima(objective, lo, hi, 30, iterations);
      if (z_opt < local_zeta) consider(alpha, tau_opt, coeffs, tail);
    }
  }

  if (cfg.projective) best.rho_atom = dominant_component(best.rho_atom);
  best.purity = best.rho_atom.purity();
  best.report = squeezing_report(best.rho_atom, cfg.phi_grid);
  return best;
}

/// Non-dominated samples: no other sample has both smaller lambda_min and
/// larger |<S>|. Sorted by |<S>| ascending.
inline std::vector<SearchSample> pareto_front(std::vector<SearchSample> samples) {
  std::erase_if(samples, [](const SearchSample& s) { return s.spin_length <= 0.0; });
  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
    return a.spin_length != b.spin_length ? a.spin_length > b.spin_length : a.lambda_min < b.lambda_min;
  });
  std::vector<SearchSample> front;
  double best_lambda = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.lambda_min < best_lambda) {
      front.push_back(s);
      best_lambda = s.lambda_min;
    }
  }
  std::reverse(front.begin(), front.end());
  return front;
}

/// Front point closest to (lambda_min, |<S>|) = target, in relative distance.
inline SearchSample closest_pareto_point(const std::vector<SearchSample>& samples, double lambda_target, double length_target) {
  const auto front = pareto_front(samples);
  if (front.empty()) throw Error(ErrorKind::DegenerateMeanSpin, "no sample with a defined mean spin");
  return *std::min_element(front.begin(), front.end(), [&](const auto& a, const auto& b) {
    const auto dist = [&](const SearchSample& s) {
      return std::hypot((s.lambda_min - lambda_target) / lambda_target, (s.spin_length - length_target) / length_target);
    };
    return dist(a) < dist(b);
  });
}

// ---------------------------------------------------------------------------
// Stage 2: rotate the collective spin

inline DensityMatrix stage2_rotate(const DensityMatrix& rho_atom, double theta, double phi) {
  return rotate(rho_atom, rotation_operator(theta, phi, DickeSpace(rho_atom.space.two_s)));
}

struct OrientResult {
  DensityMatrix rho;
  Mat3 rotation = Mat3::Identity();
  EulerAngles angles{0, 0, 0};
};

/// SO(3) rotation taking the state's (mean direction, min-variance axis)
/// frame onto the requested one, applied through ZYZ Euler angles.
inline OrientResult stage2_auto_orient(const DensityMatrix& rho_atom, const AutoOrient& target) {
  const auto t = transverse_covariance(spin_moments(rho_atom));
  const double th = target.theta_from_south;
  const Vec3 n_t(0.0, std::sin(th), -std::cos(th));
  const Vec3 in_plane(0.0, std::cos(th), std::sin(th));
  const Vec3 u_t = std::cos(target.chi) * Vec3::UnitX() + std::sin(target.chi) * in_plane;
  Mat3 from, to;
  from << t.direction, t.min_axis, t.direction.cross(t.min_axis);
  to << n_t, u_t, n_t.cross(u_t);
  OrientResult out;
  out.rotation = to * from.transpose();
  out.angles = euler_zyz(out.rotation);
  const SpinRotator rotator{DickeSpace(rho_atom.space.two_s)};
  out.rho = rotate(rho_atom, rotator.euler(out.angles.alpha, out.angles.beta, out.angles.gamma));
  return out;
}

// ---------------------------------------------------------------------------
// Stage 3: radiate into a vacuum cavity

struct ConservationCheck {
  double norm_dev = 0.0;        // max |norm - 1|
  double excitation_dev = 0.0;  // max |<a^dag a + Sz + S>(tau) - initial|
  double energy_dev = 0.0;      // max |<H>(tau) - initial| / max(1, |<H>(0)|)
  bool passes(double tol = 1e-10) const { return norm_dev <= tol && excitation_dev <= tol && energy_dev <= tol; }
};

inline ConservationCheck conservation(const RadiationSeries& run) {
  ConservationCheck c;
  if (!run.has_spin_covariance || run.size() == 0) return c;
  const auto& norm = run.raw["norm"];
  const auto& nexc = run.raw["nexc"];
  const auto& h = run.raw["H"];
  const double h0 = h[0].real();
  for (std::size_t t = 0; t < run.size(); ++t) {
    c.norm_dev = std::max(c.norm_dev, std::abs(norm[t] - 1.0));
    c.excitation_dev = std::max(c.excitation_dev, std::abs(nexc[t] - nexc[0]));
    c.energy_dev = std::max(c.energy_dev, std::abs(h[t] - h[0]) / std::max(1.0, std::abs(h0)));
  }
  return c;
}

struct Stage3Result {
  RadiationSeries series;
  std::vector<double> phi_grid;
  std::size_t best_index = 0;
  double tau_star = 0.0;
  DensityMatrix rho_field;  // at tau_star
  ConservationCheck conservation;
};

/// Default radiation window: one period of the small-angle solution,
/// pi / sqrt(2 S0), with S0 the prepared mean-spin length.
inline std::vector<double> default_tau3_grid(const DensityMatrix& rho_atom, int points = 121) {
  const double s0 = spin_moments(rho_atom).mean.norm();
  const double stop = s0 > 0 ? approx_period(s0) : kPi;
  return Range{0.0, stop, points}.values();
}

inline Stage3Result stage3_radiate(const Radiator& radiator, const DensityMatrix& rho_atom,
                                   const std::vector<double>& tau_grid, const std::vector<double>& phi_grid) {
  Stage3Result out;
  out.series = radiator.run(rho_atom, tau_grid, true);
  out.phi_grid = phi_grid;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < out.series.size(); ++t) {
    const double v = out.series.field(t).min_variance();
    if (v < best) {
      best = v;
      out.best_index = t;
    }
  }
  out.tau_star = tau_grid.empty() ? 0.0 : tau_grid[out.best_index];
  const auto state = radiator.propagator().evolve(radiator.initial_state(rho_atom), out.tau_star);
  out.rho_field = partial_trace(state, Keep::Field);
  out.conservation = conservation(out.series);
  return out;
}

inline Stage3Result stage3_radiate(const DensityMatrix& rho_atom, const std::vector<double>& tau_grid,
                                   const std::vector<double>& phi_grid) {
  return stage3_radiate(Radiator(rho_atom.space.two_s), rho_atom, tau_grid, phi_grid);
}

// ---------------------------------------------------------------------------
// Full protocol

struct PipelineResult {
  Stage1Result stage1;
  DensityMatrix rotated;
  SqueezingReport rotated_report;
  std::optional<OrientResult> orientation;
  Stage3Result stage3;
  std::optional<QGrid> qgrid;
  std::optional<BlochGrid> husimi;
};

struct GridOptions {
  bool compute = true;
  int q_points = 201;
  BlochGridSpec bloch{};
};

inline PipelineResult run_pipeline(const PrepConfig& cfg, const GridOptions& grids = {}) {
  PipelineResult r;
  r.stage1 = stage1_prepare(cfg);
  if (const auto* manual = std::get_if<ManualRotation>(&cfg.rotation)) {
    r.rotated = stage2_rotate(r.stage1.rho_atom, manual->theta, manual->phi);
  } else {
    r.orientation = stage2_auto_orient(r.stage1.rho_atom, std::get<AutoOrient>(cfg.rotation));
    r.rotated = r.orientation->rho;
  }
  r.rotated_report = squeezing_report(r.rotated, cfg.phi_grid);
  const auto taus = cfg.tau3_grid ? cfg.tau3_grid->values() : default_tau3_grid(r.rotated);
  r.stage3 = stage3_radiate(r.rotated, taus, cfg.phi_grid);
  if (grids.compute) {
    r.qgrid = field_q(r.stage3.rho_field, QGridSpec::for_atoms(cfg.num_atoms, grids.q_points));
    r.husimi = spin_husimi(r.rotated, grids.bloch);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Achievable-region scan

/// Runs fn(0..count-1) on a small pool; each index is handled exactly once
/// and results are written by index, so output order never depends on timing.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t j = 0; j < count; ++j) fn(j);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t j = next++; j < count; j = next++) {
        try {
          fn(j);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

struct ScanConfig {
  std::vector<int> atom_counts = {2, 5, 10, 20};
  Range alpha_range{1.0, 6.0, 11};
  Range tau1_range{0.0, 3.0, 61};
  std::vector<double> theta_grid = Range{0.0, kPi, 13}.values();  // mean spin angle from -z
  int chi_points = 8;                                            // squeeze-axis angles in [0, pi)
  int tau3_points = 41;
  double fixed_phi = kPi / 2;
  // Atom counts at or above this use `samples` random rotations instead of the full grid.
  int sampled_from = 50;
  int samples = 40;
  std::uint64_t seed = 12345;
  unsigned threads = 0;
};

struct RegionPoint {
  int num_atoms = 0;
  double abs_a = 0, var_min_phi = 0, var_fixed_phi = 0, var_radial = 0, var_tangential = 0, tau = 0;
  double alpha = 0, tau1 = 0, theta_r = 0, chi = 0;
};

using HullPoint = boost::geometry::model::d2::point_xy<double>;
using HullPolygon = boost::geometry::model::polygon<HullPoint>;

struct RegionSummary {
  int num_atoms = 0;
  double alpha = 0, tau1 = 0, zeta = 0, spin_length = 0, lambda_min = 0;
  std::vector<std::pair<double, double>> hull;  // (|<a>|, min-phi variance), closed ring
  double hull_area = 0;
  double max_abs_a = 0;
  double energy_bound = 0;  // sqrt(2S)
  double min_tangential_variance = 0;
};

struct RegionDataset {
  std::vector<RegionPoint> points;
  std::vector<RegionSummary> summaries;
  std::uint64_t seed = 0;
};

inline HullPolygon convex_hull(const std::vector<std::pair<double, double>>& pts) {
  boost::geometry::model::multi_point<HullPoint> cloud;
  for (const auto& [x, y] : pts) cloud.emplace_back(x, y);
  HullPolygon hull;
  boost::geometry::convex_hull(cloud, hull);
  return hull;
}

inline HullPolygon to_polygon(const std::vector<std::pair<double, double>>& ring) {
  HullPolygon poly;
  for (const auto& [x, y] : ring) poly.outer().emplace_back(x, y);
  boost::geometry::correct(poly);
  return poly;
}

/// Fraction of hull `inner` lying inside hull `outer`.
inline double hull_containment(const std::vector<std::pair<double, double>>& inner,
                               const std::vector<std::pair<double, double>>& outer) {
  const auto a = to_polygon(inner), b = to_polygon(outer);
  const double area = boost::geometry::area(a);
  if (area <= 0) return 1.0;
  std::vector<HullPolygon> overlap;
  boost::geometry::intersection(a, b, overlap);
  double shared = 0;
  for (const auto& p : overlap) shared += boost::geometry::area(p);
  return shared / area;
}

struct ScanJob {
  double theta, chi;
};

inline std::vector<ScanJob> scan_jobs(const ScanConfig& cfg, int num_atoms, std::mt19937_64& rng) {
  std::vector<ScanJob> jobs;
  if (num_atoms >= cfg.sampled_from) {
    std::uniform_real_distribution<double> theta(0.0, kPi), chi(0.0, kPi);
    for (int j = 0; j < cfg.samples; ++j) {
      const double t = theta(rng);
      jobs.push_back({t, chi(rng)});
    }
    return jobs;
  }
  for (double t : cfg.theta_grid)
    for (int c = 0; c < cfg.chi_points; ++c) jobs.push_back({t, kPi * c / cfg.chi_points});
  return jobs;
}

/// For each atom number: find the most squeezed stage-1 state, rotate it over
/// the (theta, chi) grid, radiate for one analytic period and collect every
/// (|<a>|, variance) pair along the way.
inline RegionDataset scan_achievable_region(const ScanConfig& cfg) {
  RegionDataset out;
  out.seed = cfg.seed;
  std::mt19937_64 rng(cfg.seed);
  for (int n_atoms : cfg.atom_counts) {
    PrepConfig prep;
    prep.num_atoms = n_atoms;
    prep.alpha_range = cfg.alpha_range;
    prep.tau1_range = cfg.tau1_range;
    prep.phi_grid = {};
    const auto s1 = stage1_prepare(prep);
    const auto moments = spin_moments(s1.rho_atom);
    const double s0 = moments.mean.norm();
    const auto taus = Range{0.0, approx_period(s0), cfg.tau3_points}.values();
    const Radiator radiator(n_atoms);
    const auto jobs = scan_jobs(cfg, n_atoms, rng);

    std::vector<std::vector<RegionPoint>> per_job(jobs.size());
    parallel_for(
        jobs.size(),
        [&](std::size_t j) {
          const auto oriented = stage2_auto_orient(s1.rho_atom, {jobs[j].theta, jobs[j].chi});
          const auto run = radiator.run(oriented.rho, taus, false);
          for (std::size_t t = 0; t < run.size(); ++t) {
            const auto f = run.field(t);
            per_job[j].push_back({n_atoms, std::abs(f.a), f.min_variance(), f.variance(cfg.fixed_phi), f.radial_variance(),
                                  f.tangential_variance(), taus[t], s1.alpha.real(), s1.tau1, jobs[j].theta, jobs[j].chi});
          }
        },
        cfg.threads);

    RegionSummary summary;
    summary.num_atoms = n_atoms;
    summary.alpha = s1.alpha.real();
    summary.tau1 = s1.tau1;
    summary.zeta = s1.report.zeta;
    summary.spin_length = s0;
    summary.lambda_min = s1.report.transverse.lambda_min;
    summary.energy_bound = std::sqrt(static_cast<double>(n_atoms));
    summary.min_tangential_variance = std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, double>> cloud;
    for (auto& pts : per_job) {
      for (auto& p : pts) {
        summary.max_abs_a = std::max(summary.max_abs_a, p.abs_a);
        // Tangential quadrature is only meaningful once a mean field exists.
        if (p.abs_a > 1e-6) summary.min_tangential_variance = std::min(summary.min_tangential_variance, p.var_tangential);
        cloud.emplace_back(p.abs_a, p.var_min_phi);
        out.points.push_back(p);
      }
    }
    const auto hull = convex_hull(cloud);
    for (const auto& p : hull.outer()) summary.hull.emplace_back(p.x(), p.y());
    summary.hull_area = boost::geometry::area(hull);
    out.summaries.push_back(std::move(summary));
  }
  return out;
}

}  // namespace fewphoton
