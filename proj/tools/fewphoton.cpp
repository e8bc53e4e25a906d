// Command-line driver: runs one protocol stage (or the whole chain) from a
// JSON config and writes CSV/JSON artifacts plus a checksummed manifest.
//
//   fewphoton <command> [--config file.json] [--out dir]
//
// Exit status: 0 success, 1 numerical failure, 2 config error. Failures are
// reported on stderr as one JSON object {"error", "message", "field"}.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

#include "CLI11.hpp"
#include "fewphoton/fewphoton.hpp"
#include "fewphoton/io.hpp"

namespace fp = fewphoton;
using fp::io::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitNumerical = 1;
constexpr int kExitConfig = 2;

[[noreturn]] void config_error(const std::string& field, const std::string& message) {
  throw fp::Error(fp::ErrorKind::Config, message, field);
}

// ---------------------------------------------------------------------------
// Config access with field-level errors

class Config {
 public:
  explicit Config(json j) : j_(std::move(j)) {
    if (!j_.is_object()) config_error("<root>", "config must be a JSON object");
  }

  const json& raw() const { return j_; }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  const json& at(const std::string& key) const { return j_.at(key); }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    ok.insert("output_dir");
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) config_error(k, "unknown config field");
  }

  double number(const std::string& key, double fallback) const {
    return has(key) ? as_number(j_.at(key), key) : fallback;
  }
  double number(const std::string& key) const {
    if (!has(key)) config_error(key, "required field missing");
    return as_number(j_.at(key), key);
  }
  int integer(const std::string& key, int fallback) const { return has(key) ? as_int(j_.at(key), key) : fallback; }
  int integer(const std::string& key) const {
    if (!has(key)) config_error(key, "required field missing");
    return as_int(j_.at(key), key);
  }
  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_boolean()) config_error(key, "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) config_error(key, "expected a string");
    return j_.at(key).get<std::string>();
  }

  static double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) config_error(field, "expected a number");
    return v.get<double>();
  }
  static int as_int(const json& v, const std::string& field) {
    if (!v.is_number_integer()) config_error(field, "expected an integer");
    return v.get<int>();
  }

 private:
  json j_;
};

fp::Range parse_range(const json& v, const std::string& field, bool non_negative) {
  if (!v.is_object()) config_error(field, "expected {start, stop, points}");
  for (const auto& [k, _] : v.items())
    if (k != "start" && k != "stop" && k != "points") config_error(field + "." + k, "unknown range field");
  for (const char* k : {"start", "stop", "points"})
    if (!v.contains(k)) config_error(field + "." + k, "required field missing");
  fp::Range r{Config::as_number(v.at("start"), field + ".start"), Config::as_number(v.at("stop"), field + ".stop"),
              Config::as_int(v.at("points"), field + ".points")};
  if (r.points < 1) config_error(field + ".points", "must be >= 1");
  if (r.points > 1 && !(r.stop > r.start)) config_error(field, "grid must be strictly increasing");
  if (non_negative && r.start < 0) config_error(field + ".start", "must be >= 0");
  return r;
}

std::vector<double> parse_grid(const json& v, const std::string& field, bool non_negative) {
  if (v.is_object()) return parse_range(v, field, non_negative).values();
  if (!v.is_array()) config_error(field, "expected an array of numbers or {start, stop, points}");
  std::vector<double> out;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const auto name = field + "[" + std::to_string(j) + "]";
    out.push_back(Config::as_number(v[j], name));
    if (non_negative && out.back() < 0) config_error(name, "must be >= 0");
    if (j > 0 && !(out[j] > out[j - 1])) config_error(name, "grid must be strictly increasing");
  }
  return out;
}

std::vector<int> parse_int_list(const Config& c, const std::string& key, std::vector<int> fallback) {
  if (!c.has(key)) return fallback;
  const auto& v = c.at(key);
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array() || v.empty()) config_error(key, "expected an integer or a non-empty array of integers");
  std::vector<int> out;
  for (std::size_t j = 0; j < v.size(); ++j) out.push_back(Config::as_int(v[j], key + "[" + std::to_string(j) + "]"));
  return out;
}

fp::Complex parse_alpha(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_object()) config_error("alpha", "expected a number or {re, im}");
  for (const auto& [k, _] : v.items())
    if (k != "re" && k != "im") config_error("alpha." + k, "unknown field");
  const double re = v.contains("re") ? Config::as_number(v.at("re"), "alpha.re") : 0.0;
  const double im = v.contains("im") ? Config::as_number(v.at("im"), "alpha.im") : 0.0;
  return {re, im};
}

std::variant<fp::ManualRotation, fp::AutoOrient> parse_rotation(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "auto" || s == "auto-phase") return fp::AutoOrient::phase();
    if (s == "auto-amplitude") return fp::AutoOrient::amplitude();
    config_error("rotation", "expected \"auto\", \"auto-phase\", \"auto-amplitude\" or an object");
  }
  if (!v.is_object()) config_error("rotation", "expected a string or an object");
  if (v.contains("theta") || v.contains("phi")) {
    for (const auto& [k, _] : v.items())
      if (k != "theta" && k != "phi") config_error("rotation." + k, "unknown field for a manual rotation");
    return fp::ManualRotation{v.contains("theta") ? Config::as_number(v.at("theta"), "rotation.theta") : 0.0,
                              v.contains("phi") ? Config::as_number(v.at("phi"), "rotation.phi") : 0.0};
  }
  fp::AutoOrient a;
  for (const auto& [k, val] : v.items()) {
    if (k == "auto") continue;
    if (k == "theta_from_south") a.theta_from_south = Config::as_number(val, "rotation.theta_from_south");
    else if (k == "chi") a.chi = Config::as_number(val, "rotation.chi");
    else config_error("rotation." + k, "unknown field for auto-orientation");
  }
  return a;
}

const std::initializer_list<const char*> kPrepKeys = {
    "num_atoms", "alpha", "alpha_range", "tau1", "tau1_range", "rotation", "tau3_grid", "phi_grid", "n_max",
    "seed", "tail_tol", "spin_floor_fraction", "projective", "fixed_phi", "q_points", "bloch_theta_points",
    "bloch_phi_points", "state_file"};

fp::PrepConfig parse_prep(const Config& c) {
  fp::PrepConfig p;
  p.num_atoms = c.integer("num_atoms");
  if (p.num_atoms < 1) config_error("num_atoms", "must be >= 1");
  if (c.has("alpha")) p.alpha = parse_alpha(c.at("alpha"));
  if (c.has("alpha_range")) p.alpha_range = parse_range(c.at("alpha_range"), "alpha_range", false);
  if (c.has("tau1")) {
    if (c.at("tau1").is_object()) {
      p.tau1_range = parse_range(c.at("tau1"), "tau1", true);
    } else {
      p.tau1 = c.number("tau1");
      if (p.tau1 < 0) config_error("tau1", "must be >= 0");
    }
  }
  if (c.has("tau1_range")) p.tau1_range = parse_range(c.at("tau1_range"), "tau1_range", true);
  if (c.has("rotation")) p.rotation = parse_rotation(c.at("rotation"));
  if (c.has("tau3_grid")) {
    if (!c.at("tau3_grid").is_object()) config_error("tau3_grid", "expected {start, stop, points}");
    p.tau3_grid = parse_range(c.at("tau3_grid"), "tau3_grid", true);
  }
  if (c.has("phi_grid")) p.phi_grid = parse_grid(c.at("phi_grid"), "phi_grid", false);
  if (c.has("n_max")) {
    const auto& v = c.at("n_max");
    if (v.is_string()) {
      if (v.get<std::string>() != "auto") config_error("n_max", "expected an integer or \"auto\"");
    } else {
      p.n_max = Config::as_int(v, "n_max");
      if (*p.n_max < 0) config_error("n_max", "must be >= 0");
    }
  }
  if (c.has("seed")) {
    if (!c.at("seed").is_number_unsigned()) config_error("seed", "expected a non-negative integer");
    p.seed = c.at("seed").get<std::uint64_t>();
  }
  p.tail_tol = c.number("tail_tol", p.tail_tol);
  if (!(p.tail_tol > 0)) config_error("tail_tol", "must be positive");
  p.spin_floor_fraction = c.number("spin_floor_fraction", p.spin_floor_fraction);
  p.projective = c.boolean("projective", p.projective);
  p.fixed_phi = c.number("fixed_phi", p.fixed_phi);
  return p;
}

fp::GridOptions parse_grids(const Config& c) {
  fp::GridOptions g;
  g.q_points = c.integer("q_points", g.q_points);
  g.bloch.theta_points = c.integer("bloch_theta_points", g.bloch.theta_points);
  g.bloch.phi_points = c.integer("bloch_phi_points", g.bloch.phi_points);
  if (g.q_points < 2) config_error("q_points", "must be >= 2");
  if (g.bloch.theta_points < 2) config_error("bloch_theta_points", "must be >= 2");
  if (g.bloch.phi_points < 2) config_error("bloch_phi_points", "must be >= 2");
  return g;
}

fp::DensityMatrix load_state(const Config& c, fp::SpaceTag expected) {
  const auto path = c.string("state_file", "");
  if (path.empty()) config_error("state_file", "required field missing");
  std::ifstream in(path);
  if (!in) config_error("state_file", "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error("state_file", e.what());
  }
  fp::DensityMatrix rho;
  try {
    rho = fp::io::density_from_json(j);
  } catch (const json::exception& e) {
    config_error("state_file", e.what());
  }
  if (expected == fp::SpaceTag::Fock && rho.space.tag == fp::SpaceTag::Joint) rho = fp::partial_trace(rho, fp::Keep::Field);
  if (expected == fp::SpaceTag::Dicke && rho.space.tag == fp::SpaceTag::Joint) rho = fp::partial_trace(rho, fp::Keep::Atom);
  if (rho.space.tag != expected)
    config_error("state_file", "state lives on a " + std::string(fp::to_string(rho.space.tag)) + " space");
  return rho;
}

// ---------------------------------------------------------------------------
// Report pieces

json stage1_json(const fp::Stage1Result& s) {
  return {{"alpha", {{"re", s.alpha.real()}, {"im", s.alpha.imag()}}},
          {"tau1", s.tau1},
          {"n_max", s.n_max},
          {"coherent_tail", s.tail},
          {"purity", s.purity},
          {"trace", s.rho_atom.trace()},
          {"squeezing", fp::io::to_json(s.report)}};
}

std::string samples_csv(const std::vector<fp::SearchSample>& samples) {
  using fp::io::fmt;
  std::string out = "alpha,tau,spin_length,lambda_min,lambda_max,zeta\n";
  for (const auto& s : samples) {
    out += fmt(s.alpha) + ',' + fmt(s.tau) + ',' + fmt(s.spin_length) + ',' + fmt(s.lambda_min) + ',' +
           fmt(s.lambda_max) + ',' + fmt(s.zeta) + '\n';
  }
  return out;
}

json orientation_json(const fp::PipelineResult& r, const fp::PrepConfig& p) {
  if (r.orientation) {
    const auto& a = std::get<fp::AutoOrient>(p.rotation);
    const auto& e = r.orientation->angles;
    return {{"mode", "auto"},
            {"theta_from_south", a.theta_from_south},
            {"chi", a.chi},
            {"euler_zyz", {e.alpha, e.beta, e.gamma}}};
  }
  const auto& m = std::get<fp::ManualRotation>(p.rotation);
  return {{"mode", "manual"}, {"theta", m.theta}, {"phi", m.phi}};
}

json stage3_json(const fp::Stage3Result& s) {
  const auto f = s.series.field(s.best_index);
  return {{"tau_star", s.tau_star},
          {"best_index", s.best_index},
          {"abs_a", std::abs(f.a)},
          {"var_min_phi", f.min_variance()},
          {"min_phi", f.min_variance_phi()},
          {"var_radial", f.radial_variance()},
          {"var_tangential", f.tangential_variance()},
          {"conservation",
           {{"norm_dev", s.conservation.norm_dev},
            {"excitation_dev", s.conservation.excitation_dev},
            {"energy_dev", s.conservation.energy_dev},
            {"passes", s.conservation.passes()}}}};
}

fs::path output_dir(const Config& c, const std::string& flag, const std::string& command) {
  if (!flag.empty()) return flag;
  return c.string("output_dir", "out/" + command);
}

// ---------------------------------------------------------------------------
// Commands

int cmd_prep(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow(kPrepKeys);
  const auto p = parse_prep(c);
  const auto s1 = fp::stage1_prepare(p);
  w.json_file("rho_atom.json", fp::io::to_json(s1.rho_atom), "state");
  w.text("samples.csv", samples_csv(s1.samples), "search");
  w.json_file("report.json", {{"stage1", stage1_json(s1)}}, "report");
  return 0;
}

fp::DensityMatrix atomic_source(const Config& c, const fp::PrepConfig& p, json& report) {
  if (c.has("state_file")) return load_state(c, fp::SpaceTag::Dicke);
  const auto s1 = fp::stage1_prepare(p);
  report["stage1"] = stage1_json(s1);
  return s1.rho_atom;
}

fp::PrepConfig parse_prep_or_state(const Config& c) {
  if (c.has("state_file") && !c.has("num_atoms")) {
    const auto rho = load_state(c, fp::SpaceTag::Dicke);
    json copy = c.raw();
    copy["num_atoms"] = rho.space.two_s;
    return parse_prep(Config(copy));
  }
  return parse_prep(c);
}

fp::DensityMatrix apply_rotation(const fp::DensityMatrix& rho, const fp::PrepConfig& p, json& report) {
  if (const auto* m = std::get_if<fp::ManualRotation>(&p.rotation)) {
    report["rotation"] = {{"mode", "manual"}, {"theta", m->theta}, {"phi", m->phi}};
    return fp::stage2_rotate(rho, m->theta, m->phi);
  }
  const auto& a = std::get<fp::AutoOrient>(p.rotation);
  const auto o = fp::stage2_auto_orient(rho, a);
  report["rotation"] = {{"mode", "auto"},
                        {"theta_from_south", a.theta_from_south},
                        {"chi", a.chi},
                        {"euler_zyz", {o.angles.alpha, o.angles.beta, o.angles.gamma}}};
  return o.rho;
}

int cmd_rotate(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow(kPrepKeys);
  const auto p = parse_prep_or_state(c);
  json report;
  const auto rho = atomic_source(c, p, report);
  const auto rotated = apply_rotation(rho, p, report);
  report["stage2"] = fp::io::to_json(fp::squeezing_report(rotated, p.phi_grid));
  w.json_file("rho_rotated.json", fp::io::to_json(rotated), "state");
  w.json_file("report.json", report, "report");
  return 0;
}

int cmd_radiate(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow(kPrepKeys);
  const auto p = parse_prep_or_state(c);
  json report;
  auto rho = atomic_source(c, p, report);
  // A state file is radiated as given unless a rotation is requested.
  if (!c.has("state_file") || c.has("rotation")) rho = apply_rotation(rho, p, report);
  const auto taus = p.tau3_grid ? p.tau3_grid->values() : fp::default_tau3_grid(rho);
  const auto s3 = fp::stage3_radiate(rho, taus, p.phi_grid);
  report["stage3"] = stage3_json(s3);
  w.text("series.csv", fp::io::series_csv(fp::io::radiation_table(s3, p.fixed_phi)), "series");
  w.json_file("rho_field.json", fp::io::to_json(s3.rho_field), "state");
  w.json_file("report.json", report, "report");
  return s3.conservation.passes() ? 0 : kExitNumerical;
}

int cmd_pipeline(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow(kPrepKeys);
  const auto p = parse_prep(c);
  const auto grids = parse_grids(c);
  const auto r = fp::run_pipeline(p, grids);
  json report{{"stage1", stage1_json(r.stage1)},
              {"rotation", orientation_json(r, p)},
              {"stage2", fp::io::to_json(r.rotated_report)},
              {"stage3", stage3_json(r.stage3)},
              {"fixed_phi", p.fixed_phi},
              {"phi_grid", p.phi_grid}};
  report["profile_match"] = fp::profile_match(*r.qgrid, *r.husimi);
  w.text("series.csv", fp::io::series_csv(fp::io::radiation_table(r.stage3, p.fixed_phi)), "series");
  w.text("qgrid.csv", fp::io::matrix_csv(r.qgrid->values), "grid");
  w.json_file("qgrid.json", fp::io::qgrid_sidecar(*r.qgrid), "sidecar");
  w.text("husimi.csv", fp::io::matrix_csv(r.husimi->values), "grid");
  w.json_file("husimi.json", fp::io::bloch_sidecar(*r.husimi), "sidecar");
  w.text("qgrid.pgm", fp::io::pgm(r.qgrid->values), "preview");
  w.text("husimi.pgm", fp::io::pgm(r.husimi->values), "preview");
  w.json_file("rho_atom.json", fp::io::to_json(r.stage1.rho_atom), "state");
  w.json_file("rho_rotated.json", fp::io::to_json(r.rotated), "state");
  w.json_file("rho_field.json", fp::io::to_json(r.stage3.rho_field), "state");
  w.json_file("report.json", report, "report");
  return r.stage3.conservation.passes() ? 0 : kExitNumerical;
}

int cmd_scan_region(const Config& c, fp::io::ArtifactWriter& w, json& extra) {
  c.allow({"atom_counts", "alpha_range", "tau1_range", "theta_points", "chi_points", "tau3_points", "fixed_phi",
           "sampled_from", "samples", "seed", "threads"});
  fp::ScanConfig s;
  s.atom_counts = parse_int_list(c, "atom_counts", s.atom_counts);
  for (std::size_t j = 0; j < s.atom_counts.size(); ++j)
    if (s.atom_counts[j] < 1) config_error("atom_counts[" + std::to_string(j) + "]", "must be >= 1");
  if (c.has("alpha_range")) s.alpha_range = parse_range(c.at("alpha_range"), "alpha_range", false);
  if (c.has("tau1_range")) s.tau1_range = parse_range(c.at("tau1_range"), "tau1_range", true);
  if (c.has("theta_points")) {
    const int n = c.integer("theta_points");
    if (n < 1) config_error("theta_points", "must be >= 1");
    s.theta_grid = fp::Range{0.0, fp::kPi, n}.values();
  }
  s.chi_points = c.integer("chi_points", s.chi_points);
  s.tau3_points = c.integer("tau3_points", s.tau3_points);
  s.fixed_phi = c.number("fixed_phi", s.fixed_phi);
  s.sampled_from = c.integer("sampled_from", s.sampled_from);
  s.samples = c.integer("samples", s.samples);
  if (s.chi_points < 1) config_error("chi_points", "must be >= 1");
  if (s.tau3_points < 2) config_error("tau3_points", "must be >= 2");
  if (s.samples < 1) config_error("samples", "must be >= 1");
  if (c.has("seed")) {
    if (!c.at("seed").is_number_unsigned()) config_error("seed", "expected a non-negative integer");
    s.seed = c.at("seed").get<std::uint64_t>();
  }
  const int threads = c.integer("threads", 0);
  if (threads < 0) config_error("threads", "must be >= 0");
  s.threads = static_cast<unsigned>(threads);

  const auto data = fp::scan_achievable_region(s);
  w.text("region.csv", fp::io::region_csv(data), "region");
  w.json_file("region.json", fp::io::region_summary_json(data), "region");
  extra["seed"] = s.seed;
  return 0;
}

int cmd_qfunc(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow({"state_file", "re_min", "re_max", "im_min", "im_max", "points", "edge_tol"});
  const auto rho = load_state(c, fp::SpaceTag::Fock);
  fp::QGridSpec spec;
  spec.re_min = c.number("re_min", spec.re_min);
  spec.re_max = c.number("re_max", spec.re_max);
  spec.im_min = c.number("im_min", spec.im_min);
  spec.im_max = c.number("im_max", spec.im_max);
  spec.points = c.integer("points", spec.points);
  if (!(spec.re_max > spec.re_min)) config_error("re_max", "must exceed re_min");
  if (!(spec.im_max > spec.im_min)) config_error("im_max", "must exceed im_min");
  if (spec.points < 2) config_error("points", "must be >= 2");
  const auto q = fp::field_q(rho, spec, c.number("edge_tol", 1e-10));
  w.text("qgrid.csv", fp::io::matrix_csv(q.values), "grid");
  w.json_file("qgrid.json", fp::io::qgrid_sidecar(q), "sidecar");
  return 0;
}

int cmd_husimi(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow({"state_file", "theta_points", "phi_points"});
  const auto rho = load_state(c, fp::SpaceTag::Dicke);
  fp::BlochGridSpec spec;
  spec.theta_points = c.integer("theta_points", spec.theta_points);
  spec.phi_points = c.integer("phi_points", spec.phi_points);
  if (spec.theta_points < 2) config_error("theta_points", "must be >= 2");
  if (spec.phi_points < 2) config_error("phi_points", "must be >= 2");
  const auto g = fp::spin_husimi(rho, spec);
  w.text("husimi.csv", fp::io::matrix_csv(g.values), "grid");
  w.json_file("husimi.json", fp::io::bloch_sidecar(g), "sidecar");
  return 0;
}

int cmd_verify(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow({"num_atoms", "n_max", "phi", "tolerance", "conservation_tolerance", "dump_operators"});
  const auto atoms = parse_int_list(c, "num_atoms", {1});
  const auto cutoffs = parse_int_list(c, "n_max", {4});
  const auto phis = c.has("phi") ? parse_grid(c.at("phi"), "phi", false) : std::vector<double>{0.0, fp::kPi / 4, fp::kPi / 2};
  const double tol = c.number("tolerance", 1e-12);
  const double cons_tol = c.number("conservation_tolerance", 1e-10);
  for (std::size_t j = 0; j < atoms.size(); ++j)
    if (atoms[j] < 1) config_error("num_atoms[" + std::to_string(j) + "]", "must be >= 1");
  for (std::size_t j = 0; j < cutoffs.size(); ++j)
    if (cutoffs[j] < 1) config_error("n_max[" + std::to_string(j) + "]", "must be >= 1");

  bool ok = true;
  json identities = json::array();
  json propagators = json::array();
  json conservation = json::array();
  for (int n : atoms) {
    for (int nm : cutoffs) {
      const auto js = fp::JointSpace::make(n, nm);
      for (double phi : phis) {
        const auto r = fp::check_heisenberg_identities(js, phi);
        const bool pass = r.max_residual() <= tol;
        ok = ok && pass;
        auto j = fp::io::to_json(r);
        j["pass"] = pass;
        identities.push_back(j);
      }
      const auto h = fp::interaction_hamiltonian(js);
      const auto prop = fp::diagonalize(h);
      const bool pass = prop.max_residual() <= 1e-10 && prop.max_unitarity_defect() <= 1e-10;
      ok = ok && pass;
      propagators.push_back({{"two_s", n}, {"n_max", nm}, {"eigen_residual", prop.max_residual()},
                             {"unitarity_defect", prop.max_unitarity_defect()}, {"pass", pass}});
      if (c.boolean("dump_operators", false)) {
        const auto prefix = "H_2S" + std::to_string(n) + "_n" + std::to_string(nm);
        for (const auto& path : fp::io::dump_operator(h, w.dir() / "operators", prefix))
          w.record(fs::relative(path, w.dir()).generic_string(), "operator");
      }
    }
    const fp::Radiator radiator(n);
    const auto rho = fp::to_density(fp::bloch_state(2 * fp::kPi / 3, 0.0, fp::DickeSpace(n)));
    const auto run = radiator.run(rho, fp::Range{0.0, 2 * fp::kPi, 101}.values());
    const auto cc = fp::conservation(run);
    const bool pass = cc.passes(cons_tol);
    ok = ok && pass;
    conservation.push_back({{"two_s", n}, {"norm_dev", cc.norm_dev}, {"excitation_dev", cc.excitation_dev},
                            {"energy_dev", cc.energy_dev}, {"pass", pass}});
  }
  w.json_file("verify.json",
              {{"tolerance", tol}, {"conservation_tolerance", cons_tol}, {"identities", identities},
               {"propagators", propagators}, {"conservation", conservation}, {"pass", ok}},
              "report");
  return ok ? 0 : kExitNumerical;
}

int cmd_feasibility(const Config& c, fp::io::ArtifactWriter& w) {
  c.allow({"g_hz", "tau", "lifetime_s", "cavity_lifetime_s", "frequency_hz", "temperature_k"});
  const auto r = fp::feasibility_report(c.number("g_hz"), c.number("tau"), c.number("lifetime_s"),
                                        c.number("cavity_lifetime_s"));
  json out = fp::io::to_json(r);
  if (c.has("frequency_hz") || c.has("temperature_k"))
    out["thermal_occupancy"] = fp::thermal_occupancy(c.number("frequency_hz"), c.number("temperature_k"));
  w.json_file("feasibility.json", out, "report");
  return 0;
}

void print_error(const std::string& kind, const std::string& message, const std::string& field) {
  json e{{"error", kind}, {"message", message}};
  e["field"] = field.empty() ? json(nullptr) : json(field);
  std::cerr << e.dump() << std::endl;
}

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) config_error("--config", "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    config_error("<document>", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective-atom radiation: prepare, rotate, radiate, scan."};
  app.require_subcommand(1);
  std::string config_path, out_flag;

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"prep", "stage 1: squeeze the atoms with a coherent field"},
      {"rotate", "stage 2: rotate the collective spin"},
      {"radiate", "stage 3: radiate into an empty cavity"},
      {"pipeline", "all three stages plus phase-space grids"},
      {"scan-region", "achievable (|<a>|, variance) region per atom number"},
      {"qfunc", "field Q function of a stored field state"},
      {"husimi", "spin Husimi distribution of a stored atomic state"},
      {"verify", "operator identities, spectral residuals and conservation"},
      {"feasibility", "interaction time against lifetimes; thermal occupancy"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_flag, "output directory (overrides output_dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("ConfigError", e.what(), "<arguments>");
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const Config config(read_config(config_path));
    fp::io::ArtifactWriter writer(output_dir(config, out_flag, command));
    json extra{{"status", "ok"}};
    int status = 0;
    if (command == "prep") status = cmd_prep(config, writer);
    else if (command == "rotate") status = cmd_rotate(config, writer);
    else if (command == "radiate") status = cmd_radiate(config, writer);
    else if (command == "pipeline") status = cmd_pipeline(config, writer);
    else if (command == "scan-region") status = cmd_scan_region(config, writer, extra);
    else if (command == "qfunc") status = cmd_qfunc(config, writer);
    else if (command == "husimi") status = cmd_husimi(config, writer);
    else if (command == "verify") status = cmd_verify(config, writer);
    else if (command == "feasibility") status = cmd_feasibility(config, writer);
    if (config.has("seed") && !extra.contains("seed")) extra["seed"] = config.at("seed");
    if (status != 0) extra["status"] = "check_failed";
    writer.finish(command, config.raw(), extra);
    return status;
  } catch (const fp::Error& e) {
    print_error(std::string(fp::to_string(e.kind())), e.what(), e.field());
    return e.kind() == fp::ErrorKind::Config ? kExitConfig : kExitNumerical;
  } catch (const json::exception& e) {
    print_error("ConfigError", e.what(), "<document>");
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what(), "");
    return kExitNumerical;
  }
}
