#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fewphoton/fewphoton.hpp"
#include "fewphoton/io.hpp"

using namespace fewphoton;
using io::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fewphoton_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Format, RoundTripPrecision) {
  for (double x : {0.1, 1.0 / 3, -2.5e-300, 12345.678901234567}) EXPECT_EQ(std::stod(io::fmt(x)), x);
}

TEST(Sha256, KnownVectors) {
  const auto dir = scratch("sha");
  io::write_text(dir / "empty", "");
  io::write_text(dir / "abc", "abc");
  io::write_text(dir / "long", "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq");
  EXPECT_EQ(io::sha256_hex(dir / "empty"), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(io::sha256_hex(dir / "abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(io::sha256_hex(dir / "long"), "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  EXPECT_THROW(io::sha256_hex(dir / "missing"), Error);
}

TEST(Manifest, ListsFilesWithChecksums) {
  const auto dir = scratch("manifest");
  io::ArtifactWriter w(dir);
  w.text("a.csv", "x,y\n1,2\n", "table");
  w.json_file("b.json", json{{"k", 1}}, "report");
  w.finish("unit", json{{"seed", 7}}, json{{"seed", 7}});
  const auto m = json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(m["command"], "unit");
  EXPECT_EQ(m["seed"], 7);
  ASSERT_EQ(m["files"].size(), 2u);
  EXPECT_EQ(m["files"][0]["path"], "a.csv");
  EXPECT_EQ(m["files"][0]["kind"], "table");
  EXPECT_EQ(m["files"][0]["bytes"], 8);
  for (const auto& f : m["files"]) {
    const auto p = dir / f["path"].get<std::string>();
    EXPECT_EQ(f["sha256"], io::sha256_hex(p));
    EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(p));
  }
  // "x,y\n1,2\n" digest from coreutils sha256sum.
  EXPECT_EQ(m["files"][0]["sha256"], "81bf9fa83c6f7f151bd491a98cd7d933de3965289e3ebd77c6c425f7eaa16392");
}

TEST(StateJson, DensityRoundTrip) {
  PrepConfig cfg;
  cfg.num_atoms = 5;
  cfg.alpha = 1.5;
  cfg.tau1 = 0.7;
  cfg.phi_grid = {};
  const auto rho = stage1_prepare(cfg).rho_atom;
  const auto j = io::to_json(rho);
  EXPECT_EQ(j["kind"], "density");
  EXPECT_EQ(j["space"]["tag"], "dicke");
  EXPECT_EQ(j["space"]["two_s"], 5);
  EXPECT_EQ(j["data"].size(), 36u);
  const auto back = io::density_from_json(json::parse(j.dump()));
  EXPECT_EQ(back.space, rho.space);
  EXPECT_EQ(max_abs(back.matrix - rho.matrix), 0.0);
}

TEST(StateJson, PureStateLabels) {
  const auto js = JointSpace::make(1, 2);
  const auto psi = product_state(dicke_basis_state(1, js->dicke()), fock_state(2, js->fock()));
  const auto j = io::to_json(psi);
  ASSERT_EQ(j["amplitudes"].size(), 6u);
  EXPECT_EQ(j["amplitudes"][0]["basis"], "m=-1/2,n=0");
  EXPECT_EQ(j["amplitudes"][5]["basis"], "m=1/2,n=2");
  EXPECT_EQ(j["amplitudes"][5]["re"], 1.0);
  const auto rho = io::density_from_json(j);
  EXPECT_EQ(rho.space.tag, SpaceTag::Joint);
  EXPECT_EQ(rho.matrix(5, 5), Complex(1.0));
  EXPECT_EQ(io::basis_label(SpaceInfo::of(DickeSpace(2)), 0), "m=-1");
  EXPECT_EQ(io::basis_label(SpaceInfo::of(FockSpace(3)), 3), "n=3");
}

TEST(StateJson, BadInputsAreConfigErrors) {
  EXPECT_THROW(io::space_from_json(json{{"tag", "qubit"}}), Error);
  json bad = io::to_json(to_density(dicke_basis_state(0, DickeSpace(2))));
  bad["data"].erase(0);
  try {
    io::density_from_json(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.field(), "data");
  }
}

TEST(SeriesCsv, HeaderAndRows) {
  ObservableSeries s;
  s.tau = {0.0, 0.5};
  s.names = {"a", "sz"};
  s.values = {{Complex(1, 2), Complex(3, 4)}, {Complex(-1, 0), Complex(0.25, 0)}};
  const auto l = lines(io::series_csv(s));
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0], "tau,a_re,a_im,sz_re,sz_im");
  EXPECT_EQ(l[1], "0,1,2,-1,0");
  EXPECT_EQ(l[2], "0.5,3,4,0.25,0");
}

TEST(SeriesCsv, RadiationTableColumns) {
  const auto rho = to_density(bloch_state(2.5, 0.0, DickeSpace(4)));
  const auto s3 = stage3_radiate(rho, Range{0.0, 1.0, 5}.values(), {0.0, kPi / 2});
  const auto l = lines(io::series_csv(io::radiation_table(s3, kPi / 2)));
  ASSERT_EQ(l.size(), 6u);
  for (const char* col : {"tau,a_re,a_im,", "sz_re", "abs_a_re", "var_min_phi_re", "var_fixed_phi_re", "var_radial_re",
                          "var_tangential_re", "var_a_phi0_re", "var_a_phi1_re", "theta_re"})
    EXPECT_NE(l[0].find(col), std::string::npos) << col;
  EXPECT_EQ(l[0].rfind("tau,", 0), 0u);
}

TEST(RegionCsv, Header) {
  RegionDataset d;
  d.points.push_back({2, 0.5, 0.2, 0.3, 0.24, 0.26, 0.1, 1.5, 1.2, 0.5, 0.0});
  const auto l = lines(io::region_csv(d));
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0], "N,abs_a,var_min_phi,var_fixed_phi,tau,alpha,tau1,theta_r,chi,var_radial,var_tangential");
  EXPECT_EQ(l[1], "2,0.5,0.20000000000000001,0.29999999999999999,0.10000000000000001,1.5,1.2,0.5,0,0.23999999999999999,0.26000000000000001");
}

TEST(Grids, MatrixCsvAndSidecars) {
  RMatrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(io::matrix_csv(m), "1,2,3\n4,5,6\n");
  const auto q = field_q(fock_state(0, FockSpace(2)), QGridSpec{-4, 4, -4, 4, 81});
  const auto side = io::qgrid_sidecar(q);
  EXPECT_EQ(side["points"], 81);
  EXPECT_NEAR(side["normalization"]["integral"].get<double>(), 1.0, 1e-6);
  const auto g = spin_husimi(to_density(dicke_basis_state(0, DickeSpace(3))), BlochGridSpec{31, 60});
  EXPECT_EQ(io::bloch_sidecar(g)["two_s"], 3);
  const auto img = io::pgm(m);
  EXPECT_EQ(img.rfind("P5\n3 2\n255\n", 0), 0u);
  EXPECT_EQ(img.size(), std::string("P5\n3 2\n255\n").size() + 6);
  // Bottom row of the matrix comes first; the maximum maps to 255.
  EXPECT_EQ(static_cast<unsigned char>(img[img.size() - 6 + 2]), 255);
}

TEST(Reports, SqueezingJsonKeys) {
  const auto rho = to_density(bloch_state(3 * kPi / 4, 0.0, DickeSpace(10)));
  const auto j = io::to_json(squeezing_report(rho, {0.0, kPi / 2}));
  for (const char* k : {"mean_spin", "transverse", "cond_field_squeeze", "cond_tailor_made", "cond_popular_x",
                        "cond_popular_y", "squeezing_ratio"})
    EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j["cond_field_squeeze"].size(), 2u);
  EXPECT_TRUE(j["cond_tailor_made"]["boundary"].get<bool>());
  const auto h = io::to_json(check_heisenberg_identities(JointSpace::make(1, 4), 0.0));
  EXPECT_EQ(h["identities"].size(), 3u);
  EXPECT_LE(h["max_residual"].get<double>(), 1e-12);
}

TEST(Reports, OperatorDump) {
  const auto dir = scratch("dump");
  const auto files = io::dump_operator(interaction_hamiltonian(JointSpace::make(1, 2)), dir, "H");
  EXPECT_EQ(files.size(), 4u);
  const auto l = lines(slurp(dir / "H_k1_k1.csv"));
  ASSERT_EQ(l.size(), 5u);
  EXPECT_EQ(l[0], "row,col,re,im");
  EXPECT_EQ(l[2], "0,1,1,0");
  EXPECT_EQ(io::sector_table(*JointSpace::make(1, 2)).size(), 4u);
}
