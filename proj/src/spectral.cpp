#include "facelap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace facelap {

SymmetricOperator::SymmetricOperator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw std::invalid_argument("SymmetricOperator: matrix not square");
  if (asymmetry(m_) > 1e-12) throw std::invalid_argument("SymmetricOperator: matrix not symmetric");
}

MassMatrix::MassMatrix(std::vector<double> diagonal) : d_(std::move(diagonal)) {
  for (std::size_t i = 0; i < d_.size(); ++i) {
    if (!(d_[i] > 0.0)) {
      throw DegenerateGeometryError("mass matrix entry " + std::to_string(i) + " is not positive");
    }
  }
}

SymmetricOperator graph_laplacian(std::span<const Face> faces, std::size_t n) {
  Matrix l(n, n);
  std::vector<Edge> edges;
  edges.reserve(faces.size() * 3);
  for (const Face& t : faces) {
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = t[k];
      std::uint32_t b = t[(k + 1) % 3];
      if (a >= n || b >= n) throw std::invalid_argument("graph_laplacian: face index out of range");
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& [a, b] : edges) {
    if (a == b) continue;
    l(a, b) = -1.0;
    l(b, a) = -1.0;
    l(a, a) += 1.0;
    l(b, b) += 1.0;
  }
  return SymmetricOperator(std::move(l));
}

namespace {

void check_face_area(std::span<const Vec3> v, const Face& t, std::size_t f) {
  const double area = 0.5 * norm(cross(v[t[1]] - v[t[0]], v[t[2]] - v[t[0]]));
  if (!(area >= 1e-12)) {
    throw DegenerateGeometryError("face " + std::to_string(f) + " (" + std::to_string(t[0]) + ", " +
                                  std::to_string(t[1]) + ", " + std::to_string(t[2]) +
                                  ") has zero area");
  }
}

// Cotangent of the angle at `apex` between the edges to b and c.
double cot_at(const Vec3& apex, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - apex;
  const Vec3 e2 = c - apex;
  return dot(e1, e2) / norm(cross(e1, e2));
}

}  // namespace

SymmetricOperator cotan_stiffness(std::span<const Vec3> vertices, std::span<const Face> faces) {
  const std::size_t n = vertices.size();
  Matrix s(n, n);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    check_face_area(vertices, t, f);
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t i = t[k];
      const std::uint32_t j = t[(k + 1) % 3];
      const std::uint32_t o = t[(k + 2) % 3];
      // Interior edges collect one cotangent from each side.
      const double w = cot_at(vertices[o], vertices[i], vertices[j]);
      s(i, j) -= w;
      s(j, i) -= w;
      s(i, i) += w;
      s(j, j) += w;
    }
  }
  return SymmetricOperator(std::move(s));
}

MassMatrix voronoi_mass(std::span<const Vec3> vertices, std::span<const Face> faces, MassScheme scheme) {
  std::vector<double> mass(vertices.size(), 0.0);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    check_face_area(vertices, t, f);
    const Vec3& p0 = vertices[t[0]];
    const Vec3& p1 = vertices[t[1]];
    const Vec3& p2 = vertices[t[2]];
    const double area = 0.5 * norm(cross(p1 - p0, p2 - p0));
    if (scheme == MassScheme::Barycentric) {
      for (auto v : t) mass[v] += area / 3.0;
      continue;
    }
    const Vec3 p[3] = {p0, p1, p2};
    int obtuse = -1;
    for (int k = 0; k < 3; ++k) {
      if (dot(p[(k + 1) % 3] - p[k], p[(k + 2) % 3] - p[k]) <= 0.0) obtuse = k;
    }
    if (obtuse >= 0) {
      for (int k = 0; k < 3; ++k) mass[t[k]] += k == obtuse ? area / 2.0 : area / 4.0;
      continue;
    }
    // Circumcentric Voronoi region: (|e_ij|^2 cot_k + |e_ik|^2 cot_j) / 8.
    double cots[3];
    for (int k = 0; k < 3; ++k) cots[k] = cot_at(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
    for (int k = 0; k < 3; ++k) {
      const int j = (k + 1) % 3;
      const int l = (k + 2) % 3;
      const Vec3 eij = p[j] - p[k];
      const Vec3 eil = p[l] - p[k];
      mass[t[k]] += (dot(eij, eij) * cots[l] + dot(eil, eil) * cots[j]) / 8.0;
    }
  }
  return MassMatrix(std::move(mass));
}

SymmetricOperator symmetrize(const SymmetricOperator& stiffness, const MassMatrix& mass) {
  const std::size_t n = stiffness.dimension();
  if (mass.dimension() != n) throw std::invalid_argument("symmetrize: dimension mismatch");
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mass[i] > 0.0)) throw DegenerateGeometryError("symmetrize: non-positive mass entry");
    inv_sqrt[i] = 1.0 / std::sqrt(mass[i]);
  }
  Matrix o = stiffness.matrix();
  for (std::size_t i = 0; i < n; ++i) {
    auto row = o.row(i);
    for (std::size_t j = 0; j < n; ++j) row[j] *= inv_sqrt[i] * inv_sqrt[j];
  }
  // Both triangles are scaled by the same products, so O stays exactly symmetric.
  return SymmetricOperator(std::move(o));
}

SpectralBasis eig_sym(const SymmetricOperator& a, std::size_t k) {
  const std::size_t n = a.dimension();
  if (k < 1 || k > n) throw std::invalid_argument("eig_sym: need 1 <= k <= n");
  EigenDecomposition ed = symmetric_eigen(a.matrix(), k);
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = std::abs(ed.vectors(r, c));
      if (v > best) {
        best = v;
        arg = r;
      }
    }
    if (ed.vectors(arg, c) < 0.0)
      for (std::size_t r = 0; r < n; ++r) ed.vectors(r, c) = -ed.vectors(r, c);
  }
  return SpectralBasis{std::move(ed.values), std::move(ed.vectors)};
}

std::vector<double> shape_dna_spectrum(std::span<const Vec3> vertices, std::span<const Face> faces,
                                       MassScheme scheme) {
  const SymmetricOperator o = symmetrize(cotan_stiffness(vertices, faces), voronoi_mass(vertices, faces, scheme));
  std::vector<double> ev = symmetric_eigenvalues(o.matrix());
  double scale = 0.0;
  for (double v : ev) scale = std::max(scale, std::abs(v));
  std::vector<double> out;
  out.reserve(ev.size());
  for (double v : ev)
    if (std::abs(v) > 1e-9 * scale) out.push_back(v);
  return out;
}

std::vector<double> shape_dna(const CanonicalPatch& patch, std::span<const Face> faces, std::size_t k,
                              MassScheme scheme) {
  std::vector<double> spec = shape_dna_spectrum(patch.vertices, faces, scheme);
  if (spec.size() < k) {
    throw std::invalid_argument("shape_dna: only " + std::to_string(spec.size()) +
                                " non-zero eigenvalues available, " + std::to_string(k) + " requested");
  }
  spec.resize(k);
  return spec;
}

SpectralBasis glf_basis(const PatchConfig& cfg, std::size_t k) {
  const auto faces = canonical_connectivity(cfg);
  return eig_sym(graph_laplacian(faces, cfg.vertex_count()), k);
}

std::uint64_t config_hash(const PatchConfig& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(cfg.curves);
  mix(cfg.samples);
  return h;
}

}  // namespace facelap
