#pragma once

// Artifact serialization: JSON states and reports, CSV series and grids,
// and the checksummed run manifest consumed by downstream renderers.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "json.hpp"

#include "fewphoton/dynamics.hpp"
#include "fewphoton/error.hpp"
#include "fewphoton/pipeline.hpp"
#include "fewphoton/quasiprob.hpp"
#include "fewphoton/squeezing.hpp"
#include "fewphoton/states.hpp"

namespace fewphoton::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Full round-trip precision for doubles in text output.
inline std::string fmt(double x) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

inline json space_json(const SpaceInfo& s) {
  json j{{"tag", std::string(to_string(s.tag))}};
  if (s.tag != SpaceTag::Fock) {
    j["two_s"] = s.two_s;
    j["spin"] = 0.5 * s.two_s;
  }
  if (s.tag != SpaceTag::Dicke) j["n_max"] = s.n_max;
  return j;
}

inline SpaceInfo space_from_json(const json& j) {
  SpaceInfo s;
  const auto tag = j.at("tag").get<std::string>();
  if (tag == "dicke") s.tag = SpaceTag::Dicke;
  else if (tag == "fock") s.tag = SpaceTag::Fock;
  else if (tag == "joint") s.tag = SpaceTag::Joint;
  else throw Error(ErrorKind::Config, "unknown space tag " + tag, "space.tag");
  s.two_s = j.value("two_s", 0);
  s.n_max = j.value("n_max", 0);
  return s;
}

/// Basis label of index j: "m=<m>" (Dicke), "n=<n>" (Fock) or "m=<m>,n=<n>".
inline std::string basis_label(const SpaceInfo& s, std::size_t j) {
  const auto m_label = [&](std::size_t i) {
    const int twice_m = 2 * static_cast<int>(i) - s.two_s;
    return twice_m % 2 == 0 ? std::to_string(twice_m / 2) : std::to_string(twice_m) + "/2";
  };
  switch (s.tag) {
    case SpaceTag::Dicke: return "m=" + m_label(j);
    case SpaceTag::Fock: return "n=" + std::to_string(j);
    case SpaceTag::Joint: {
      const std::size_t df = static_cast<std::size_t>(s.n_max) + 1;
      return "m=" + m_label(j / df) + ",n=" + std::to_string(j % df);
    }
  }
  return {};
}

inline json to_json(const PureState& psi) {
  json amps = json::array();
  for (Eigen::Index j = 0; j < psi.amplitudes.size(); ++j) {
    amps.push_back({{"basis", basis_label(psi.space, static_cast<std::size_t>(j))},
                    {"re", psi.amplitudes(j).real()},
                    {"im", psi.amplitudes(j).imag()}});
  }
  return {{"kind", "pure"}, {"space", space_json(psi.space)}, {"truncated_tail", psi.truncated_tail}, {"amplitudes", amps}};
}

inline json to_json(const DensityMatrix& rho) {
  json data = json::array();
  for (Eigen::Index r = 0; r < rho.matrix.rows(); ++r)
    for (Eigen::Index c = 0; c < rho.matrix.cols(); ++c) data.push_back({rho.matrix(r, c).real(), rho.matrix(r, c).imag()});
  return {{"kind", "density"},
          {"space", space_json(rho.space)},
          {"dim", rho.matrix.rows()},
          {"layout", "row-major [re, im]"},
          {"trace", rho.trace()},
          {"data", data}};
}

inline DensityMatrix density_from_json(const json& j) {
  if (j.value("kind", "") == "pure") {
    PureState psi;
    psi.space = space_from_json(j.at("space"));
    const auto& amps = j.at("amplitudes");
    psi.amplitudes.resize(static_cast<Eigen::Index>(amps.size()));
    for (std::size_t k = 0; k < amps.size(); ++k)
      psi.amplitudes(static_cast<Eigen::Index>(k)) = {amps[k].at("re").get<double>(), amps[k].at("im").get<double>()};
    return to_density(psi);
  }
  DensityMatrix rho;
  rho.space = space_from_json(j.at("space"));
  const auto dim = static_cast<Eigen::Index>(rho.space.dim());
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != dim * dim)
    throw Error(ErrorKind::DimensionMismatch, "density data size does not match space", "data");
  rho.matrix.resize(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto& e = data[static_cast<std::size_t>(r * dim + c)];
      rho.matrix(r, c) = {e.at(0).get<double>(), e.at(1).get<double>()};
    }
  return rho;
}

inline json to_json(const CriterionResult& c) {
  return {{"satisfied", c.satisfied}, {"boundary", c.boundary}, {"lhs", c.lhs}, {"rhs", c.rhs}};
}

inline json vec_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

inline json to_json(const SqueezingReport& r) {
  const auto& t = r.transverse;
  json fs = json::array();
  for (const auto& e : r.field_squeeze) fs.push_back({{"phi", e.phi}, {"result", to_json(e.result)}});
  return {{"mean_spin", {{"sx", t.mean.sx}, {"sy", t.mean.sy}, {"sz", t.mean.sz}, {"magnitude", t.mean.magnitude()}}},
          {"transverse",
           {{"frame", {vec_json(t.e1), vec_json(t.e2)}},
            {"matrix", {{t.matrix(0, 0), t.matrix(0, 1)}, {t.matrix(1, 0), t.matrix(1, 1)}}},
            {"lambda_min", t.lambda_min},
            {"lambda_max", t.lambda_max},
            {"min_axis", vec_json(t.min_axis)}}},
          {"cond_field_squeeze", fs},
          {"cond_tailor_made", to_json(r.tailor_made)},
          {"cond_popular_x", to_json(r.popular_x)},
          {"cond_popular_y", to_json(r.popular_y)},
          {"squeezing_ratio", r.zeta}};
}

inline json to_json(const FeasibilityReport& r) {
  return {{"g_hz", r.g_hz},
          {"tau", r.tau},
          {"time_s", r.time_s},
          {"lifetime_s", r.lifetime_s},
          {"cavity_lifetime_s", r.cavity_lifetime_s},
          {"within_atomic_lifetime", r.within_atomic_lifetime},
          {"within_cavity_lifetime", r.within_cavity_lifetime},
          {"feasible", r.feasible()}};
}

inline json to_json(const HeisenbergReport& r) {
  json ids = json::array();
  for (const auto& id : r.identities)
    ids.push_back({{"identity", id.name}, {"residual", id.residual}, {"full_space_residual", id.full_space_residual}});
  return {{"two_s", r.two_s}, {"n_max", r.n_max}, {"phi", r.phi}, {"coupling", r.coupling}, {"identities", ids},
          {"max_residual", r.max_residual()}};
}

inline json sector_table(const JointSpace& space) {
  json out = json::array();
  for (const auto& s : space.sectors()) {
    json members = json::array();
    for (const auto& m : s.members) members.push_back({{"m", space.dicke().m(static_cast<std::size_t>(m.i))}, {"n", m.n}});
    out.push_back({{"k", s.k}, {"dim", s.dim()}, {"members", members}});
  }
  return out;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string(), "output_dir");
  out << text;
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// One CSV per block: row, col, re, im (positions inside the sectors).
inline std::vector<fs::path> dump_operator(const BlockedOperator& op, const fs::path& dir, const std::string& prefix) {
  std::vector<fs::path> files;
  for (const auto& [key, blk] : op.blocks()) {
    std::ostringstream s;
    s << "row,col,re,im\n";
    for (Eigen::Index r = 0; r < blk.rows(); ++r)
      for (Eigen::Index c = 0; c < blk.cols(); ++c)
        s << r << ',' << c << ',' << fmt(blk(r, c).real()) << ',' << fmt(blk(r, c).imag()) << '\n';
    const auto path = dir / (prefix + "_k" + std::to_string(key.first) + "_k" + std::to_string(key.second) + ".csv");
    write_text(path, s.str());
    files.push_back(path);
  }
  return files;
}

/// tau, then <name>_re,<name>_im per observable.
inline std::string series_csv(const ObservableSeries& s) {
  std::ostringstream out;
  out << "tau";
  for (const auto& n : s.names) out << ',' << n << "_re," << n << "_im";
  out << '\n';
  for (std::size_t t = 0; t < s.tau.size(); ++t) {
    out << fmt(s.tau[t]);
    for (const auto& col : s.values) out << ',' << fmt(col[t].real()) << ',' << fmt(col[t].imag());
    out << '\n';
  }
  return out.str();
}

/// Radiation series plus derived columns (quadrature variances and the
/// mean-spin angle) as extra observables with zero imaginary part.
inline ObservableSeries radiation_table(const Stage3Result& r, double fixed_phi) {
  ObservableSeries s = r.series.raw;
  const auto add = [&](const std::string& name, auto&& fn) {
    std::vector<Complex> col(s.tau.size());
    for (std::size_t t = 0; t < s.tau.size(); ++t) col[t] = fn(t);
    s.names.push_back(name);
    s.values.push_back(std::move(col));
  };
  add("abs_a", [&](std::size_t t) { return Complex(std::abs(r.series.field(t).a)); });
  add("var_min_phi", [&](std::size_t t) { return Complex(r.series.field(t).min_variance()); });
  add("var_fixed_phi", [&](std::size_t t) { return Complex(r.series.field(t).variance(fixed_phi)); });
  add("var_radial", [&](std::size_t t) { return Complex(r.series.field(t).radial_variance()); });
  add("var_tangential", [&](std::size_t t) { return Complex(r.series.field(t).tangential_variance()); });
  for (std::size_t k = 0; k < r.phi_grid.size(); ++k) {
    const double phi = r.phi_grid[k];
    add("var_a_phi" + std::to_string(k), [&](std::size_t t) { return Complex(r.series.field(t).variance(phi)); });
  }
  add("theta", [&](std::size_t t) { return Complex(r.series.theta_from_south(t)); });
  return s;
}

inline std::string matrix_csv(const RMatrix& m) {
  std::ostringstream out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << fmt(m(r, c));
    out << '\n';
  }
  return out.str();
}

inline json qgrid_sidecar(const QGrid& q) {
  return {{"kind", "field_q"},
          {"rows", "Im(alpha)"},
          {"cols", "Re(alpha)"},
          {"re_range", {q.spec.re_min, q.spec.re_max}},
          {"im_range", {q.spec.im_min, q.spec.im_max}},
          {"points", q.spec.points},
          {"normalization", {{"integral", q.integral()}, {"min", q.values.minCoeff()}, {"max", q.values.maxCoeff()}}}};
}

inline json bloch_sidecar(const BlochGrid& b) {
  return {{"kind", "spin_husimi"},
          {"rows", "theta in [0, pi]"},
          {"cols", "phi in [0, 2 pi)"},
          {"theta_points", b.spec.theta_points},
          {"phi_points", b.spec.phi_points},
          {"two_s", b.two_s},
          {"normalization",
           {{"resolution_of_identity", b.resolution_of_identity()}, {"min", b.values.minCoeff()}, {"max", b.values.maxCoeff()}}}};
}

/// 8-bit binary PGM, scaled to the grid maximum. Row 0 is written last so
/// the image has the second axis increasing upward.
inline std::string pgm(const RMatrix& m) {
  std::ostringstream out;
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  const double top = m.maxCoeff() > 0 ? m.maxCoeff() : 1.0;
  for (Eigen::Index r = m.rows() - 1; r >= 0; --r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out << static_cast<char>(static_cast<unsigned char>(std::clamp(m(r, c) / top, 0.0, 1.0) * 255.0 + 0.5));
  return out.str();
}

inline std::string region_csv(const RegionDataset& d) {
  std::ostringstream out;
  out << "N,abs_a,var_min_phi,var_fixed_phi,tau,alpha,tau1,theta_r,chi,var_radial,var_tangential\n";
  for (const auto& p : d.points) {
    out << p.num_atoms << ',' << fmt(p.abs_a) << ',' << fmt(p.var_min_phi) << ',' << fmt(p.var_fixed_phi) << ','
        << fmt(p.tau) << ',' << fmt(p.alpha) << ',' << fmt(p.tau1) << ',' << fmt(p.theta_r) << ',' << fmt(p.chi) << ','
        << fmt(p.var_radial) << ',' << fmt(p.var_tangential) << '\n';
  }
  return out.str();
}

inline json region_summary_json(const RegionDataset& d) {
  json out = json::array();
  for (const auto& s : d.summaries) {
    json hull = json::array();
    for (const auto& [x, y] : s.hull) hull.push_back({x, y});
    out.push_back({{"N", s.num_atoms},
                   {"prep", {{"alpha", s.alpha}, {"tau1", s.tau1}, {"zeta", s.zeta}, {"spin_length", s.spin_length},
                             {"lambda_min", s.lambda_min}}},
                   {"hull", hull},
                   {"hull_area", s.hull_area},
                   {"max_abs_a", s.max_abs_a},
                   {"energy_bound", s.energy_bound},
                   {"min_tangential_variance", s.min_tangential_variance}});
  }
  return {{"seed", d.seed}, {"regions", out}};
}

inline std::string sha256_hex(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int j = 0; j < len; ++j) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[j]);
  return hex.str();
}

/// Tracks files written into one output directory and emits manifest.json
/// with their sizes and SHA-256 digests.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const noexcept { return dir_; }

  void text(const std::string& name, const std::string& content, const std::string& kind) {
    write_text(dir_ / name, content);
    files_.push_back({name, kind});
  }
  void json_file(const std::string& name, const json& j, const std::string& kind) { text(name, j.dump(2) + "\n", kind); }
  // A file already written below dir() by other means.
  void record(const std::string& name, const std::string& kind) { files_.push_back({name, kind}); }

  json manifest(const std::string& command, const json& config, const json& extra = json::object()) const {
    json files = json::array();
    for (const auto& f : files_) {
      const auto p = dir_ / f.name;
      files.push_back({{"path", f.name}, {"kind", f.kind}, {"bytes", fs::file_size(p)}, {"sha256", sha256_hex(p)}});
    }
    json m{{"command", command}, {"config", config}, {"files", files}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    return m;
  }

  void finish(const std::string& command, const json& config, const json& extra = json::object()) const {
    write_json(dir_ / "manifest.json", manifest(command, config, extra));
  }

 private:
  struct Entry {
    std::string name, kind;
  };
  fs::path dir_;
  std::vector<Entry> files_;
};

}  // namespace fewphoton::io
