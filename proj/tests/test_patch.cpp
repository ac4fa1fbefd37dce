#include <numbers>
#include <queue>
#include <random>
#include <set>

#include "doctest.h"
#include "facelap/dataset.hpp"
#include "facelap/patch.hpp"
#include "support.hpp"

using namespace facelap;
using facelap::testing::grid_mesh;

namespace {

double max_level_error(const LevelCurve& c, const Vec3& r) {
  double worst = 0.0;
  for (const auto& p : c.points) worst = std::max(worst, std::abs(distance(p, r) - c.lambda));
  return worst;
}

// Sum of signed turning angles of a planar closed polyline (z ignored).
double total_turning(const std::vector<Vec3>& pts) {
  double sum = 0.0;
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 a = pts[(i + 1) % n] - pts[i];
    const Vec3 b = pts[(i + 2) % n] - pts[(i + 1) % n];
    sum += std::atan2(a.x * b.y - a.y * b.x, a.x * b.x + a.y * b.y);
  }
  return sum;
}

double perimeter(const std::vector<Vec3>& pts) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) s += distance(pts[i], pts[(i + 1) % pts.size()]);
  return s;
}

}  // namespace

TEST_SUITE("patch") {

TEST_CASE("config validation and levels") {
  PatchConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.vertex_count() == 751);
  CHECK(cfg.level(0) == 5.0);
  CHECK(cfg.level(14) == 20.0);
  CHECK_THROWS((PatchConfig{5, 5, 15, 50}.validate()));
  CHECK_THROWS((PatchConfig{0, 5, 15, 50}.validate()));
  CHECK_THROWS((PatchConfig{1, 5, 1, 50}.validate()));
  CHECK_THROWS((PatchConfig{1, 5, 4, 2}.validate()));
}

TEST_CASE("planar level curve lies on the circle and closes once") {
  const auto g = grid_mesh(20, 20);
  const Vec3 r{0, 0, 0};
  auto c = extract_level_curve(g, r, 2.0);
  REQUIRE(c.points.size() >= 8);
  CHECK(max_level_error(c, r) <= 1e-6 * 2.0);
  CHECK(std::abs(std::abs(total_turning(c.points)) - 2.0 * std::numbers::pi) < 1e-9);
}

TEST_CASE("small level crosses each fan edge once") {
  const auto g = grid_mesh(10, 10);
  const Vec3 r{0, 0, 0};
  const auto c = extract_level_curve(g, r, 0.4);
  CHECK(c.points.size() == vertex_degrees(g)[nearest_vertex(g, r)]);
  CHECK(max_level_error(c, r) <= 1e-6 * 0.4);
}

TEST_CASE("off-vertex landmark") {
  const auto g = grid_mesh(20, 20);
  const Vec3 r{0.31, -0.27, 0};
  for (double lambda : {1.0, 3.5, 7.0}) {
    const auto c = extract_level_curve(g, r, lambda);
    CHECK(max_level_error(c, r) <= 1e-6 * lambda);
  }
}

TEST_CASE("sphere cap circle matches the analytic circumference") {
  const double radius = 50.0;
  const auto s = facelap::testing::sphere_mesh(radius, 90, 180);
  const Vec3 pole{0, 0, radius};
  for (double lambda : {5.0, 10.0}) {
    const auto c = extract_level_curve(s, pole, lambda);
    // Chord lambda from the pole subtends a circle of radius rho.
    const double rho = lambda * std::sqrt(1.0 - lambda * lambda / (4.0 * radius * radius));
    CHECK(perimeter(c.points) == doctest::Approx(2.0 * std::numbers::pi * rho).epsilon(0.02));
    CHECK(max_level_error(c, pole) <= 1e-6 * lambda);
  }
}

TEST_CASE("absent and open levels are reported") {
  const auto g = grid_mesh(6, 6);
  CHECK_THROWS_AS(extract_level_curve(g, {0, 0, 0}, 20.0), PatchError);
  try {
    extract_level_curve(g, {0, 0, 0}, 3.5, "L7");
    FAIL("expected PatchError");
  } catch (const PatchError& e) {
    CHECK(std::string(e.what()).find("L7") != std::string::npos);
    CHECK(e.kind() == PatchError::Kind::OpenContour);
  }
  CHECK_THROWS(extract_level_curve(g, {0, 0, 0}, 0.0));
}

TEST_CASE("uniform resampling") {
  const std::vector<Vec3> square = {{0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {0, 2, 0}};
  const auto r4 = resample_uniform(square, 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(distance(r4[i], square[i]) < 1e-12);
  const auto r8 = resample_uniform(square, 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(distance(r8[i], r8[(i + 1) % 8]) == doctest::Approx(1.0).epsilon(1e-9));

  const double radius = 7.0;
  std::vector<Vec3> circle;
  for (int i = 0; i < 20000; ++i) {
    const double t = 2.0 * std::numbers::pi * std::pow(i / 20000.0, 1.3);  // non-uniform input
    circle.push_back({radius * std::cos(t), radius * std::sin(t), 0});
  }
  const auto rc = resample_uniform(circle, 50);
  for (const auto& p : rc) CHECK(std::abs(norm(p) - radius) <= 1e-6 * radius);

  const std::vector<Vec3> point = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
  CHECK_THROWS_AS(resample_uniform(point, 5), PatchError);
}

TEST_CASE("smallest patch on a planar grid") {
  const auto g = grid_mesh(12, 12);
  const PatchConfig cfg{1.0, 2.0, 2, 3};
  const auto p = build_patch(g, {"c", {0.1, 0.05, 0}}, cfg);
  REQUIRE(p.vertices.size() == 7);
  CHECK(p.vertices[0] == Vec3{});
  for (std::size_t j = 1; j <= 3; ++j) {
    CHECK(norm(p.vertices[j]) <= 1.0 + 1e-9);
    CHECK(norm(p.vertices[j + 3]) <= 2.0 + 1e-9);
  }
  // Counter-clockwise about +z, and the first sample points along +x.
  const Vec3 a = p.vertices[1], b = p.vertices[2];
  CHECK(cross(a, b).z > 0.0);
  CHECK(p.vertices[1].x > 0.5);
}

TEST_CASE("default patch on a synthetic face") {
  SynthConfig sc;
  sc.subjects = 1;
  const auto scan = synth_scan(sc, 0, 3, 1);
  const auto patches = extract_patches(scan.mesh, scan.landmarks, PatchConfig{});
  REQUIRE(patches.size() == kSynthLandmarks);
  for (const auto& p : patches) {
    CHECK(p.vertices.size() == 751);
    CHECK_FALSE(p.missing);
  }
}

TEST_CASE("patches commute with rigid motion") {
  SynthConfig sc;
  sc.subjects = 1;
  const auto scan = synth_scan(sc, 0, 1, 2);
  std::mt19937_64 rng(21);
  const auto t = facelap::testing::random_rigid(rng);
  const auto moved = apply_transform(scan.mesh, t);
  const PatchConfig cfg;
  PatchOptions opts;
  PatchOptions moved_opts;
  moved_opts.reference_axis = t.rotate(opts.reference_axis);
  for (std::size_t l : {0u, 17u, 30u, 48u, 60u}) {
    CAPTURE(l);
    const auto& lm = scan.landmarks[l];
    const auto p = build_patch(scan.mesh, lm, cfg, opts);
    const auto q = build_patch(moved, {lm.label, t.apply(lm.position)}, cfg, moved_opts);
    double worst = 0.0;
    for (std::size_t i = 0; i < p.vertices.size(); ++i)
      worst = std::max(worst, distance(t.rotate(p.vertices[i]), q.vertices[i]));
    CHECK(worst <= 1e-6);

    PatchOptions aligned = opts;
    aligned.frame = PatchFrame::NormalAligned;
    PatchOptions moved_aligned = moved_opts;
    moved_aligned.frame = PatchFrame::NormalAligned;
    const auto pa = build_patch(scan.mesh, lm, cfg, aligned);
    const auto qa = build_patch(moved, {lm.label, t.apply(lm.position)}, cfg, moved_aligned);
    double worst_aligned = 0.0;
    for (std::size_t i = 0; i < pa.vertices.size(); ++i)
      worst_aligned = std::max(worst_aligned, distance(pa.vertices[i], qa.vertices[i]));
    CHECK(worst_aligned <= 1e-6);
  }
}

TEST_CASE("missing patches are flagged and zero-filled") {
  const auto g = grid_mesh(10, 10);
  const LandmarkSet lms({{"in", {0, 0, 0}}, {"edge", {4.5, 4.5, 0}}});
  const PatchConfig cfg{1.0, 3.0, 3, 8};
  const auto ps = extract_patches(g, lms, cfg);
  REQUIRE(ps.size() == 2);
  CHECK_FALSE(ps[0].missing);
  CHECK(ps[1].missing);
  CHECK(ps[1].vertices.size() == cfg.vertex_count());
  for (const auto& v : ps[1].vertices) CHECK(v == Vec3{});
  CHECK(ps[1].error.find("edge") != std::string::npos);
}

TEST_CASE("canonical connectivity counts") {
  CHECK(canonical_connectivity({1, 2, 2, 3}).size() == 9);
  CHECK(canonical_connectivity(PatchConfig{}).size() == 1450);
  CHECK(canonical_connectivity(PatchConfig{}) == canonical_connectivity(PatchConfig{}));
}

TEST_CASE("canonical connectivity edges and connectedness by enumeration") {
  for (std::size_t K : {2u, 3u, 5u}) {
    for (std::size_t m : {3u, 4u, 7u}) {
      const PatchConfig cfg{1.0, 2.0, K, m};
      const auto faces = canonical_connectivity(cfg);
      const std::size_t n = cfg.vertex_count();
      std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
      std::vector<int> used(n, 0);
      for (const auto& f : faces) {
        for (int a = 0; a < 3; ++a) {
          used[f[a]] = 1;
          auto e = std::minmax(f[a], f[(a + 1) % 3]);
          edges.insert(e);
        }
      }
      CHECK(edges.size() == m + K * m + m * (K - 1) + m * (K - 1));
      for (std::size_t v = 0; v < n; ++v) CHECK(used[v] == 1);

      std::vector<std::vector<std::uint32_t>> adj(n);
      for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
      }
      std::vector<int> seen(n, 0);
      std::queue<std::uint32_t> q;
      q.push(0);
      seen[0] = 1;
      std::size_t count = 1;
      while (!q.empty()) {
        const auto v = q.front();
        q.pop();
        for (auto w : adj[v])
          if (!seen[w]) {
            seen[w] = 1;
            ++count;
            q.push(w);
          }
      }
      CHECK(count == n);
    }
  }
}

}
