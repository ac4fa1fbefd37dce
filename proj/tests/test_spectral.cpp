#include <Eigen/Dense>
#include <numbers>
#include <random>

#include "doctest.h"
#include "facelap/dataset.hpp"
#include "facelap/spectral.hpp"
#include "support.hpp"

using namespace facelap;
using facelap::testing::grid_mesh;
using facelap::testing::rel_diff;

namespace {

// Graph Laplacian from an explicit edge list (faces cannot express a path).
SymmetricOperator edge_laplacian(std::size_t n, const std::vector<std::pair<int, int>>& edges) {
  Matrix l(n, n);
  for (auto [a, b] : edges) {
    l(a, b) = l(b, a) = -1.0;
    l(a, a) += 1.0;
    l(b, b) += 1.0;
  }
  return SymmetricOperator(std::move(l));
}

double row_sum_max(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double s = 0.0;
    for (double v : m.row(r)) s += v;
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

CanonicalPatch face_patch(std::size_t landmark, int expression = 3, int level = 2) {
  SynthConfig sc;
  sc.subjects = 1;
  const auto scan = synth_scan(sc, 0, expression, level);
  return build_patch(scan.mesh, scan.landmarks[landmark], PatchConfig{5, 20, 6, 16});
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("graph Laplacian of a triangle") {
  const std::vector<Face> tri = {{0, 1, 2}};
  const auto l = graph_laplacian(tri, 3);
  CHECK(l(0, 0) == 2.0);
  CHECK(l(0, 1) == -1.0);
  const auto b = eig_sym(l, 3);
  CHECK(std::abs(b.eigenvalues[0]) < 1e-9);
  CHECK(std::abs(b.eigenvalues[1] - 3.0) < 1e-9);
  CHECK(std::abs(b.eigenvalues[2] - 3.0) < 1e-9);
}

TEST_CASE("path, edge and four-cycle spectra") {
  const auto p3 = eig_sym(edge_laplacian(3, {{0, 1}, {1, 2}}), 3);
  CHECK(std::abs(p3.eigenvalues[0]) < 1e-9);
  CHECK(std::abs(p3.eigenvalues[1] - 1.0) < 1e-9);
  CHECK(std::abs(p3.eigenvalues[2] - 3.0) < 1e-9);

  const auto e = eig_sym(edge_laplacian(2, {{0, 1}}), 2);
  CHECK(std::abs(e.eigenvalues[1] - 2.0) < 1e-9);

  const auto c4 = eig_sym(edge_laplacian(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}), 4);
  for (int j = 0; j < 4; ++j) {
    // Circulant spectrum 2 - 2 cos(2 pi j / 4), sorted: 0, 2, 2, 4.
    const double expect[] = {0.0, 2.0, 2.0, 4.0};
    CHECK(std::abs(c4.eigenvalues[j] - expect[j]) < 1e-9);
  }
}

TEST_CASE("canonical graph Laplacian: rows, kernel, components") {
  const PatchConfig cfg{1, 2, 4, 6};
  const auto faces = canonical_connectivity(cfg);
  const auto l = graph_laplacian(faces, cfg.vertex_count());
  CHECK(row_sum_max(l.matrix()) == 0.0);
  const auto b = eig_sym(l, cfg.vertex_count());
  for (double v : b.eigenvalues) CHECK(v >= -1e-10);
  CHECK(std::abs(b.eigenvalues[0]) < 1e-10);
  CHECK(b.eigenvalues[1] > 1e-6);
  const double c = 1.0 / std::sqrt(static_cast<double>(cfg.vertex_count()));
  for (std::size_t r = 0; r < cfg.vertex_count(); ++r) CHECK(std::abs(b.eigenvectors(r, 0) - c) < 1e-8);

  // Two disjoint triangles: zero has multiplicity two.
  const std::vector<Face> two = {{0, 1, 2}, {3, 4, 5}};
  const auto ev = symmetric_eigenvalues(graph_laplacian(two, 6).matrix());
  CHECK(std::abs(ev[0]) < 1e-10);
  CHECK(std::abs(ev[1]) < 1e-10);
  CHECK(ev[2] > 1.0);
}

TEST_CASE("cotan weights by hand") {
  // Unit square split along the diagonal 0-2: both opposite angles are right.
  const std::vector<Vec3> sq = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  const std::vector<Face> faces = {{0, 1, 2}, {0, 2, 3}};
  const auto s = cotan_stiffness(sq, faces);
  CHECK(std::abs(s(0, 2)) < 1e-15);
  CHECK(s(0, 1) == doctest::Approx(-1.0));  // boundary edge, cot 45 deg

  const std::vector<Vec3> eq = {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}};
  const std::vector<Face> one = {{0, 1, 2}};
  const auto se = cotan_stiffness(eq, one);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(-se(i, j) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));

  const std::vector<Vec3> flat = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK_THROWS_AS(cotan_stiffness(flat, one), DegenerateGeometryError);
  CHECK_THROWS_AS(voronoi_mass(flat, one), DegenerateGeometryError);
}

TEST_CASE("mixed Voronoi mass by hand") {
  const std::vector<Face> one = {{0, 1, 2}};
  const std::vector<Vec3> eq = {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2.0, 0}};
  const auto me = voronoi_mass(eq, one);
  for (int i = 0; i < 3; ++i) CHECK(me[i] == doctest::Approx(std::sqrt(3.0) / 12.0).epsilon(1e-12));

  // Right angle at vertex 0: area/2 there, area/4 elsewhere.
  const std::vector<Vec3> rt = {{0, 0, 0}, {2, 0, 0}, {0, 1, 0}};
  const auto mr = voronoi_mass(rt, one);
  CHECK(mr[0] == doctest::Approx(0.5));
  CHECK(mr[1] == doctest::Approx(0.25));
  CHECK(mr[2] == doctest::Approx(0.25));

  // Obtuse angle at vertex 2.
  const std::vector<Vec3> ob = {{0, 0, 0}, {4, 0, 0}, {2, 0.5, 0}};
  const auto mo = voronoi_mass(ob, one);
  CHECK(mo[2] == doctest::Approx(0.5));
  CHECK(mo[0] == doctest::Approx(0.25));

  const auto mb = voronoi_mass(rt, one, MassScheme::Barycentric);
  CHECK(mb[0] == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("operator invariants on a face patch") {
  const auto p = face_patch(30);
  const auto faces = canonical_connectivity(PatchConfig{5, 20, 6, 16});
  const auto s = cotan_stiffness(p.vertices, faces);
  CHECK(row_sum_max(s.matrix()) <= 1e-9 * s.matrix().max_abs());

  const auto b = voronoi_mass(p.vertices, faces);
  double total = 0.0, mass = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& t = faces[f];
    total += 0.5 * norm(cross(p.vertices[t[1]] - p.vertices[t[0]], p.vertices[t[2]] - p.vertices[t[0]]));
  }
  for (double v : b.diagonal()) mass += v;
  CHECK(rel_diff(mass, total) <= 1e-9);

  std::mt19937_64 rng(8);
  const auto t = facelap::testing::random_rigid(rng);
  std::vector<Vec3> moved;
  for (const auto& v : p.vertices) moved.push_back(t.apply(v));
  const auto s2 = cotan_stiffness(moved, faces);
  const auto b2 = voronoi_mass(moved, faces);
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    CHECK(std::abs(b2[i] - b[i]) <= 1e-9 * b[i]);
    for (std::size_t j = 0; j < s.dimension(); ++j) CHECK(std::abs(s2(i, j) - s(i, j)) <= 1e-9 * s.matrix().max_abs());
  }
}

TEST_CASE("symmetrisation") {
  Matrix m(2, 2);
  m(0, 0) = 1;
  m(0, 1) = m(1, 0) = -1;
  m(1, 1) = 1;
  const SymmetricOperator s(m);
  CHECK(symmetrize(s, MassMatrix({1.0, 1.0})) == s);
  const auto o = symmetrize(s, MassMatrix({4.0, 1.0}));
  CHECK(o(0, 0) == doctest::Approx(0.25));
  CHECK(o(0, 1) == doctest::Approx(-0.5));
  CHECK(o(1, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(MassMatrix({1.0, 0.0}), DegenerateGeometryError);
}

TEST_CASE("symmetrised spectrum equals the generalized pencil") {
  // A five-vertex fan patch.
  std::vector<Vec3> v = {{0, 0, 0.3}};
  for (int j = 0; j < 4; ++j) {
    const double a = 2.0 * std::numbers::pi * j / 4 + 0.2 * j;
    v.push_back({std::cos(a) * (1.0 + 0.1 * j), std::sin(a), 0.05 * j});
  }
  const std::vector<Face> faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}};
  const auto s = cotan_stiffness(v, faces);
  const auto b = voronoi_mass(v, faces);
  const auto ours = symmetric_eigenvalues(symmetrize(s, b).matrix());

  Eigen::MatrixXd es(5, 5), eb = Eigen::MatrixXd::Zero(5, 5);
  for (int i = 0; i < 5; ++i) {
    eb(i, i) = b[i];
    for (int j = 0; j < 5; ++j) es(i, j) = s(i, j);
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ref(es, eb);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(ours[i] - ref.eigenvalues()(i)) <= 1e-8);
}

TEST_CASE("eig_sym sign convention and residual") {
  std::mt19937_64 rng(17);
  const auto a = facelap::testing::random_symmetric(40, rng);
  const SymmetricOperator op(a);
  const auto b = eig_sym(op, 40);
  for (std::size_t c = 0; c < 40; ++c) {
    double big = 0.0;
    for (std::size_t r = 0; r < 40; ++r)
      if (std::abs(b.eigenvectors(r, c)) > std::abs(big)) big = b.eigenvectors(r, c);
    CHECK(big > 0.0);
  }
  const Matrix av = multiply(a, b.eigenvectors);
  const double lmax = std::max(1.0, std::abs(b.eigenvalues.back()));
  for (std::size_t c = 0; c < 40; ++c)
    for (std::size_t r = 0; r < 40; ++r) CHECK(std::abs(av(r, c) - b.eigenvalues[c] * b.eigenvectors(r, c)) <= 1e-7 * lmax);
  CHECK_THROWS(eig_sym(op, 0));
  CHECK_THROWS(eig_sym(op, 41));
}

TEST_CASE("GLF basis is bit-identical across calls") {
  const PatchConfig cfg{5, 20, 5, 12};
  const auto a = glf_basis(cfg, 20);
  const auto b = glf_basis(cfg, 20);
  CHECK(a.eigenvalues == b.eigenvalues);
  CHECK(a.eigenvectors == b.eigenvectors);
  CHECK(config_hash(cfg) == config_hash(PatchConfig{1, 2, 5, 12}));
  CHECK(config_hash(cfg) != config_hash(PatchConfig{5, 20, 12, 5}));
}

TEST_CASE("Shape-DNA: scaling, rigid motion, discriminability") {
  const PatchConfig cfg{5, 20, 6, 16};
  const auto faces = canonical_connectivity(cfg);
  const auto p = face_patch(48);
  const auto base = shape_dna(p, faces, 20);
  REQUIRE(base.size() == 20);
  CHECK(base.front() > 0.0);
  CHECK(std::is_sorted(base.begin(), base.end()));

  std::mt19937_64 rng(2);
  const double s = 1.7;
  const auto t = facelap::testing::random_rigid(rng, s);
  CanonicalPatch moved = p;
  for (auto& v : moved.vertices) v = t.apply(v);
  const auto scaled = shape_dna(moved, faces, 20);
  for (std::size_t i = 0; i < 20; ++i) CHECK(rel_diff(scaled[i], base[i] / (s * s)) <= 1e-6);

  const auto flat = grid_mesh(60, 60, 0.8);
  auto bumpy_v = flat.vertices();
  for (auto& v : bumpy_v) v.z = 4.0 * std::exp(-(v.x * v.x + v.y * v.y) / 40.0);
  const TriangleMesh bumpy(bumpy_v, flat.faces());
  const auto pf = build_patch(flat, {"c", {0, 0, 0}}, cfg);
  const auto pb = build_patch(bumpy, {"c", {0, 0, 4.0}}, cfg);
  const auto df = shape_dna(pf, faces, 10);
  const auto db = shape_dna(pb, faces, 10);
  double diff = 0.0;
  for (std::size_t i = 0; i < 10; ++i) diff = std::max(diff, rel_diff(df[i], db[i]));
  CHECK(diff > 1e-3);

  CHECK_THROWS(shape_dna(p, faces, cfg.vertex_count()));
}

}
