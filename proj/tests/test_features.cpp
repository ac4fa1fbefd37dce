#include <random>

#include "doctest.h"
#include "facelap/dataset.hpp"
#include "facelap/features.hpp"
#include "support.hpp"

using namespace facelap;

namespace {

const PatchConfig kCfg{5, 20, 6, 16};

const SpectralBasis& full_basis() {
  static const SpectralBasis b = glf_basis(kCfg, kCfg.vertex_count());
  return b;
}

CanonicalPatch sample_patch(std::size_t landmark) {
  SynthConfig sc;
  sc.subjects = 1;
  const auto scan = synth_scan(sc, 0, 5, 2);
  return build_patch(scan.mesh, scan.landmarks[landmark], kCfg);
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("translation moves only the constant row") {
  const auto p = sample_patch(20);
  const Vec3 shift{3.0, -7.5, 12.25};
  CanonicalPatch q = p;
  for (auto& v : q.vertices) v += shift;
  const auto a = glf_project(p, full_basis(), 30);
  const auto b = glf_project(q, full_basis(), 30);
  const double sqrt_n = std::sqrt(static_cast<double>(kCfg.vertex_count()));
  for (int c = 0; c < 3; ++c) CHECK(b(0, c) - a(0, c) == doctest::Approx(sqrt_n * shift[c]).epsilon(1e-12));
  for (std::size_t i = 1; i < 30; ++i)
    for (int c = 0; c < 3; ++c) CHECK(std::abs(b(i, c) - a(i, c)) <= 1e-9);
}

TEST_CASE("rotation keeps row norms") {
  const auto p = sample_patch(33);
  std::mt19937_64 rng(6);
  const auto t = facelap::testing::random_rigid(rng, 1.0, 0.0);
  CanonicalPatch q = p;
  for (auto& v : q.vertices) v = t.rotate(v);
  const auto na = glf_norms(glf_project(p, full_basis(), 40));
  const auto nb = glf_norms(glf_project(q, full_basis(), 40));
  for (std::size_t i = 0; i < 40; ++i) CHECK(std::abs(na[i] - nb[i]) <= 1e-9 * std::max(1.0, na[i]));
}

TEST_CASE("an eigenvector projects to its indicator") {
  const auto& b = full_basis();
  CanonicalPatch p;
  p.vertices.resize(b.dimension());
  for (std::size_t r = 0; r < b.dimension(); ++r) p.vertices[r].x = b.eigenvectors(r, 7);
  const auto c = glf_project(p, b, 12);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(std::abs(c(i, 0) - (i == 7 ? 1.0 : 0.0)) < 1e-12);
    CHECK(c(i, 1) == 0.0);
  }
}

TEST_CASE("full reconstruction and truncation monotonicity") {
  const auto p = sample_patch(45);
  const auto& b = full_basis();
  const std::size_t n = b.dimension();
  const auto c = glf_project(p, b, n);
  const auto rec = glf_reconstruct(c, b, n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, distance(rec[i], p.vertices[i]));
  CHECK(worst <= 1e-8);

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k : {1u, 2u, 5u, 10u, 20u, 40u, 80u}) {
    const auto r = glf_reconstruct(c, b, k);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) err += dot(r[i] - p.vertices[i], r[i] - p.vertices[i]);
    CHECK(err <= prev + 1e-12);
    prev = err;
  }
}

TEST_CASE("projection is deterministic and checks dimensions") {
  const auto p = sample_patch(10);
  const auto a = glf_project(p, full_basis(), 25);
  const auto b = glf_project(p, full_basis(), 25);
  CHECK(a == b);
  CanonicalPatch wrong;
  wrong.vertices.resize(10);
  CHECK_THROWS(glf_project(wrong, full_basis(), 5));
  CHECK_THROWS(glf_project(p, full_basis(), full_basis().size() + 1));
}

TEST_CASE("norms by hand") {
  Matrix c(2, 3);
  c(0, 0) = 3;
  c(0, 1) = 4;
  c(1, 2) = 5;
  CHECK(glf_norms(c) == std::vector<double>{5.0, 5.0});
  CHECK(glf_norms(Matrix(4, 3)) == std::vector<double>(4, 0.0));
}

TEST_CASE("face assembly") {
  std::vector<std::vector<double>> blocks(2, std::vector<double>(150, 1.0));
  std::vector<std::uint8_t> mask = {0, 0};
  CHECK(assemble_face(blocks, mask, FeatureMethod::Glf, FeatureMode::Coords).values.size() == 300);

  std::vector<std::vector<double>> dna(68, std::vector<double>(50, 2.0));
  std::vector<std::uint8_t> mask68(68, 0);
  CHECK(assemble_face(dna, mask68, FeatureMethod::ShapeDna, FeatureMode::Coords).values.size() == 3400);

  std::vector<std::uint8_t> all(2, 1);
  const auto z = assemble_face(blocks, all, FeatureMethod::Glf, FeatureMode::Coords);
  CHECK(z.values == std::vector<double>(300, 0.0));
  CHECK(z.missing == all);

  blocks[1].resize(10);
  CHECK_THROWS(assemble_face(blocks, mask, FeatureMethod::Glf, FeatureMode::Coords));
}

TEST_CASE("feature names") {
  const auto coords = feature_names(2, 3, FeatureMethod::Glf, FeatureMode::Coords);
  REQUIRE(coords.size() == 18);
  CHECK(coords[0] == "L0_e0_x");
  CHECK(coords[5] == "L0_e1_z");
  CHECK(coords[17] == "L1_e2_z");
  CHECK(feature_names(2, 3, FeatureMethod::Glf, FeatureMode::Norms)[4] == "L1_e1_n");
  CHECK(feature_names(2, 3, FeatureMethod::ShapeDna, FeatureMode::Coords)[5] == "L1_e2");
  CHECK(parse_feature_method("shape-dna") == FeatureMethod::ShapeDna);
  CHECK_THROWS(parse_feature_mode("xyz"));
}

}
