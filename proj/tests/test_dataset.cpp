#include <fstream>
#include <sstream>

#include "doctest.h"
#include "facelap/dataset.hpp"
#include "facelap/spectral.hpp"
#include "support.hpp"

using namespace facelap;
using facelap::testing::rel_diff;
using facelap::testing::TempDir;

namespace {

void write(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

SynthConfig small_cfg() {
  SynthConfig c;
  c.subjects = 2;
  c.resolution = 4.0;
  return c;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("labels") {
  CHECK(expression_index("HA") == 3);
  CHECK_FALSE(expression_index("JOY").has_value());
  CHECK(expression_code(5) == "SU");
  CHECK(action_unit_slot(26) == 16);
  CHECK_FALSE(action_unit_slot(3).has_value());
  const AuMask m = parse_au_list("1+AU12+25");
  CHECK(format_au_list(m) == "1+12+25");
  CHECK(parse_au_list("") == 0u);
  CHECK_THROWS(parse_au_list("1+3"));
  CHECK_THROWS(parse_au_list("1++2"));
}

TEST_CASE("manifest CSV parsing and errors") {
  const std::string header = "subject,expression,intensity,mesh,landmarks,aus\n";
  CHECK(parse_manifest_csv(header).records.empty());
  CHECK(parse_manifest_csv("").records.empty());

  const auto m = parse_manifest_csv(header + "F0001,HA,2,a.obj,a.csv,6+12\nF0001,SU,1,\"b,1.obj\",b.csv,\n");
  REQUIRE(m.records.size() == 2);
  CHECK(m.records[0].aus == parse_au_list("6+12"));
  CHECK(m.records[1].mesh == "b,1.obj");
  CHECK(m.records[1].aus == 0u);

  CHECK_THROWS_AS(parse_manifest_csv(header + "F0001,JOY,2,a.obj,a.csv,\n"), ManifestError);
  CHECK_THROWS_AS(parse_manifest_csv(header + "F0001,HA,7,a.obj,a.csv,\n"), ManifestError);
  CHECK_THROWS_AS(parse_manifest_csv(header + "F0001,HA,x,a.obj,a.csv,\n"), ManifestError);
  CHECK_THROWS_AS(parse_manifest_csv(header + "F0001,HA,1,a.obj\n"), ManifestError);
  CHECK_THROWS_AS(parse_manifest_csv("subject,expression,mesh\n"), ManifestError);
  try {
    parse_manifest_csv(header + "F1,HA,1,a,b,\nF1,XX,1,a,b,\n", "m.csv");
    FAIL("expected ManifestError");
  } catch (const ManifestError& e) {
    CHECK(std::string(e.what()).find("m.csv:3") != std::string::npos);
  }
}

TEST_CASE("manifest JSON and duplicates") {
  const auto m = parse_manifest_json(
      R"({"records": [{"subject": "A", "expression": "AN", "intensity": 1, "mesh": "m", "landmarks": "l", "aus": [4, 23]}]})");
  REQUIRE(m.records.size() == 1);
  CHECK(m.records[0].aus == parse_au_list("4+23"));
  CHECK(parse_manifest_json("[]").records.empty());
  CHECK_THROWS_AS(parse_manifest_json("{"), ManifestError);
  CHECK_THROWS_AS(parse_manifest_json(R"([{"subject": "A"}])"), ManifestError);

  DatasetManifest dup = parse_manifest_csv(
      "subject,expression,intensity,mesh,landmarks,aus\nA,HA,1,m,l,\nA,HA,1,m2,l2,\n");
  CHECK_THROWS_AS(validate_manifest(dup, false), ManifestError);
}

TEST_CASE("1200-row manifest round trip") {
  TempDir dir("manifest");
  DatasetManifest m;
  for (int s = 0; s < 100; ++s)
    for (int e = 0; e < 6; ++e)
      for (int l = 1; l <= 2; ++l) {
        ManifestRecord r;
        r.subject = "F" + std::to_string(1000 + s);
        r.expression = e;
        r.intensity = l;
        r.mesh = "meshes/x.obj";
        r.landmarks = "lm/x.csv";
        r.aus = expression_aus(e);
        r.has_aus = true;
        m.records.push_back(r);
      }
  save_manifest_csv(m, dir / "manifest.csv");
  CHECK_THROWS_AS(load_manifest(dir / "manifest.csv"), ManifestError);  // files absent
  const auto back = load_manifest(dir / "manifest.csv", false);
  REQUIRE(back.records.size() == 1200);
  CHECK(back.records[77].aus == m.records[77].aus);
  CHECK(back.base_dir == dir.path());
  CHECK_THROWS_AS(load_manifest(dir / "nope.csv"), ManifestError);
}

TEST_CASE("BU-3DFE style directory") {
  TempDir dir("bu3dfe");
  const auto root = dir.path();
  const std::string tri = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
  for (const std::string stem : {"F0001_HA02WH_F3D", "F0001_SU04WH_F3D", "M0002_AN01AE_F3D", "F0001_NE00WH_F3D"}) {
    write(root / "F0001" / (stem + ".obj"), tri);
    write(root / "F0001" / (stem + ".csv"), "label,x,y,z\na,0,0,0\n");
  }
  write(root / "readme.txt", "not a scan");
  const auto m = scan_bu3dfe(root);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[0].subject == "F0001");
  CHECK(m.records[0].expression == 3);
  CHECK(m.records[0].intensity == 2);
  CHECK(m.records[2].subject == "M0002");
  CHECK_FALSE(m.records[0].has_aus);

  std::filesystem::remove(root / "F0001" / "F0001_SU04WH_F3D.csv");
  CHECK_THROWS_AS(scan_bu3dfe(root), ManifestError);
}

TEST_CASE("synthetic scans: structure and determinism") {
  SynthConfig cfg = small_cfg();
  cfg.seed = 7;
  const auto a = synth_scan(cfg, 1, 2, 1);
  const auto b = synth_scan(cfg, 1, 2, 1);
  CHECK(a.mesh.vertices() == b.mesh.vertices());
  CHECK(a.landmarks.size() == kSynthLandmarks);
  CHECK(synth_landmark_labels().size() == kSynthLandmarks);
  CHECK(a.subject == "S002");
  CHECK((a.aus & ~expression_aus(2)) == 0u);
  CHECK((a.aus & (1u << *action_unit_slot(expression_core_au(2)))) != 0u);

  cfg.seed = 8;
  const auto c = synth_scan(cfg, 1, 2, 1);
  CHECK(c.mesh.vertices() != a.mesh.vertices());

  SynthConfig bad = small_cfg();
  bad.amplitude_min = 0.0;
  CHECK_THROWS(bad.validate());
  bad = small_cfg();
  bad.levels = {5};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("level two displaces exactly twice as far as level one") {
  const SynthConfig cfg = small_cfg();
  const auto n = synth_neutral(cfg, 0);
  for (int e = 0; e < 6; ++e) {
    const auto l1 = synth_scan(cfg, 0, e, 1);
    const auto l2 = synth_scan(cfg, 0, e, 2);
    CHECK(l1.aus == l2.aus);
    double worst = 0.0, biggest = 0.0;
    for (std::size_t i = 0; i < n.mesh.vertex_count(); ++i) {
      const Vec3 d1 = l1.mesh.vertices()[i] - n.mesh.vertices()[i];
      const Vec3 d2 = l2.mesh.vertices()[i] - n.mesh.vertices()[i];
      worst = std::max(worst, norm(d2 - 2.0 * d1));
      biggest = std::max(biggest, norm(d1));
    }
    CHECK(biggest > 1.0);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("deformation is local in Shape-DNA") {
  SynthConfig cfg;
  cfg.subjects = 1;
  const PatchConfig pc{5, 20, 6, 16};
  const auto faces = canonical_connectivity(pc);
  const auto neutral = synth_neutral(cfg, 0);
  const auto happy = synth_scan(cfg, 0, 3, 2);
  auto spectrum = [&](const SynthScan& s, const std::string& label) {
    for (const auto& l : s.landmarks.entries())
      if (l.label == label) return shape_dna(build_patch(s.mesh, l, pc), faces, 20);
    FAIL("landmark missing");
    return std::vector<double>{};
  };
  double near = 0.0, far = 0.0;
  const auto n0 = spectrum(neutral, "mouth_outer0"), h0 = spectrum(happy, "mouth_outer0");
  const auto n1 = spectrum(neutral, "forehead"), h1 = spectrum(happy, "forehead");
  for (std::size_t i = 0; i < 20; ++i) {
    near = std::max(near, rel_diff(n0[i], h0[i]));
    far = std::max(far, rel_diff(n1[i], h1[i]));
  }
  CHECK(near > 1e-3);
  CHECK(far <= 1e-6);
}

TEST_CASE("generation writes a loadable dataset") {
  TempDir dir("synth");
  SynthConfig cfg = small_cfg();
  cfg.expressions = {0, 3};
  const auto m = synth_generate(cfg, dir.path() / "out", 2);
  CHECK(m.records.size() == 2 * 2 * 2);
  const auto back = load_manifest(dir.path() / "out" / "manifest.csv");
  REQUIRE(back.records.size() == 8);
  CHECK(back.records[0].mesh == "meshes/S001_AN_1.obj");
  CHECK(back.records[5].aus == m.records[5].aus);
  const auto mesh = load_mesh(back.resolve(back.records[3].mesh));
  const auto direct = synth_scan(cfg, 0, 3, 2);
  CHECK(mesh.vertex_count() == direct.mesh.vertex_count());
  for (std::size_t i = 0; i < mesh.vertex_count(); i += 97) CHECK(mesh.vertices()[i] == direct.mesh.vertices()[i]);
}

}
