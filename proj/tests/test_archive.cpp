#include <fstream>

#include "doctest.h"
#include "facelap/archive.hpp"
#include "support.hpp"

using namespace facelap;
using facelap::testing::TempDir;

namespace {

FeatureTable toy_table(FeatureMethod method, FeatureMode mode) {
  FeatureTable t;
  t.method = method;
  t.mode = mode;
  t.k = 3;
  t.patch = PatchConfig{5, 20, 4, 8};
  t.landmark_labels = {"a", "b"};
  for (int i = 0; i < 4; ++i) {
    t.samples.push_back({"S00" + std::to_string(i / 2), i % 2 == 0 ? 3 : 5, 1 + i % 2, parse_au_list(i % 2 ? "1+2" : "")});
    t.scans.push_back("meshes/x" + std::to_string(i) + ".obj");
    t.missing.push_back({0, static_cast<std::uint8_t>(i == 3)});
  }
  t.values = Matrix(4, t.columns());
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < t.columns(); ++c) t.values(r, c) = 0.1 * static_cast<double>(r) - 1.0 / (1.0 + c);
  return t;
}

void expect_equal(const FeatureTable& a, const FeatureTable& b, bool labels = true) {
  CHECK(a.method == b.method);
  CHECK(a.mode == b.mode);
  CHECK(a.k == b.k);
  if (labels) CHECK(a.landmark_labels == b.landmark_labels);
  CHECK(a.landmarks() == b.landmarks());
  CHECK(a.samples == b.samples);
  CHECK(a.missing == b.missing);
  CHECK(a.values == b.values);
}

}  // namespace

TEST_SUITE("archive") {

TEST_CASE("basis round trip and configuration check") {
  TempDir dir("basis");
  const PatchConfig cfg{5, 20, 3, 6};
  const auto b = glf_basis(cfg, 10);
  save_basis(b, cfg, dir / "b.bin");
  const auto back = load_basis(dir / "b.bin", cfg);
  CHECK(back.eigenvalues == b.eigenvalues);
  CHECK(back.eigenvectors == b.eigenvectors);
  CHECK_THROWS_AS(load_basis(dir / "b.bin", PatchConfig{5, 20, 4, 6}), BasisMismatchError);
  // Only (K, m) matter; the radii do not change the graph.
  CHECK_NOTHROW(load_basis(dir / "b.bin", PatchConfig{1, 2, 3, 6}));

  std::ofstream(dir / "junk.bin") << "not a basis";
  CHECK_THROWS_AS(load_basis(dir / "junk.bin", cfg), ArchiveError);

  std::filesystem::resize_file(dir / "b.bin", 100);
  CHECK_THROWS_AS(load_basis(dir / "b.bin", cfg), ArchiveError);
}

TEST_CASE("patch archives in binary and CSV") {
  TempDir dir("patches");
  PatchArchive a;
  a.config = PatchConfig{5, 20, 2, 3};
  a.scan = "S001_HA_1";
  for (int l = 0; l < 3; ++l) {
    CanonicalPatch p;
    p.label = "L" + std::to_string(l);
    for (std::size_t i = 0; i < a.config.vertex_count(); ++i) p.vertices.push_back({l + 0.1 * i, -1.0 / (i + 1), 1e-7 * i});
    p.missing = l == 1;
    if (p.missing) {
      p.vertices.assign(a.config.vertex_count(), Vec3{});
      p.error = "level absent";
    }
    a.patches.push_back(p);
  }
  for (const char* name : {"p.bin", "p.csv"}) {
    save_patch_archive(a, dir / name);
    CHECK(std::filesystem::exists(dir.path() / (std::string(name) + ".json")));
    const auto back = load_patch_archive(dir / name);
    CHECK(back.scan == a.scan);
    CHECK(back.config == a.config);
    REQUIRE(back.patches.size() == 3);
    for (int l = 0; l < 3; ++l) {
      CHECK(back.patches[l].label == a.patches[l].label);
      CHECK(back.patches[l].missing == a.patches[l].missing);
      CHECK(back.patches[l].vertices == a.patches[l].vertices);
    }
  }
}

TEST_CASE("feature tables: binary, CSV and slicing") {
  TempDir dir("features");
  for (auto [method, mode] : {std::pair{FeatureMethod::Glf, FeatureMode::Coords},
                              std::pair{FeatureMethod::Glf, FeatureMode::Norms},
                              std::pair{FeatureMethod::ShapeDna, FeatureMode::Coords}}) {
    const auto t = toy_table(method, mode);
    save_feature_table(t, dir / "f", true);
    expect_equal(t, load_feature_table(dir / "f"));
    expect_equal(t, load_feature_table(dir.path() / "f.json"));
    // The CSV carries column names only, so landmarks come back as L0, L1, ...
    const auto csv = load_feature_table(dir.path() / "f.csv");
    expect_equal(t, csv, false);
    CHECK(csv.landmark_labels[1] == "L1");
  }
  const auto t = toy_table(FeatureMethod::Glf, FeatureMode::Coords);
  CHECK(t.column_names()[4] == "L0_e1_y");

  const auto s = t.slice(1);
  CHECK(s.k == 1);
  CHECK(s.columns() == 6);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(s.values(r, 2) == t.values(r, 2));
    CHECK(s.values(r, 3) == t.values(r, 9));  // landmark b, e0_x
  }
  CHECK_THROWS(t.slice(4));

  const std::vector<std::size_t> rows = {3, 1};
  const auto sel = t.select(rows);
  CHECK(sel.samples[0] == t.samples[3]);
  CHECK(sel.values(1, 5) == t.values(1, 5));
  CHECK(t.expressions() == std::vector<int>{3, 5, 3, 5});
  CHECK(t.subjects()[2] == "S001");
}

TEST_CASE("inconsistent tables are rejected") {
  auto t = toy_table(FeatureMethod::Glf, FeatureMode::Coords);
  CHECK_NOTHROW(t.check());
  t.values = Matrix(4, 5);
  CHECK_THROWS_AS(t.check(), ArchiveError);
  TempDir dir("badtable");
  CHECK_THROWS_AS(load_feature_table(dir / "absent"), ArchiveError);
}

}
