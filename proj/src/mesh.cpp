#include <algorithm>
#include <limits>
#include <set>

#include "facelap/mesh.hpp"

namespace facelap {

TriangleMesh::TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces,
                           std::vector<std::uint8_t> valid)
    : vertices_(std::move(vertices)), faces_(std::move(faces)), valid_(std::move(valid)) {
  const std::size_t n = vertices_.size();
  if (!valid_.empty() && valid_.size() != n) {
    throw MeshError("validity flags: expected " + std::to_string(n) + " entries, got " +
                    std::to_string(valid_.size()));
  }
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const Face& t = faces_[f];
    for (std::uint32_t idx : t) {
      if (idx >= n) {
        throw MeshError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                        " but the mesh has " + std::to_string(n) + " vertices");
      }
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw MeshError("face " + std::to_string(f) + " repeats a vertex index");
    }
  }
}

std::vector<Edge> TriangleMesh::edges() const {
  std::vector<Edge> out;
  out.reserve(faces_.size() * 3);
  for (const Face& t : faces_) {
    for (int k = 0; k < 3; ++k) {
      std::uint32_t a = t[k];
      std::uint32_t b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double TriangleMesh::face_area(std::size_t f) const {
  const Face& t = faces_[f];
  return 0.5 * norm(cross(vertices_[t[1]] - vertices_[t[0]], vertices_[t[2]] - vertices_[t[0]]));
}

Vec3 TriangleMesh::face_normal(std::size_t f) const {
  const Face& t = faces_[f];
  return normalized(cross(vertices_[t[1]] - vertices_[t[0]], vertices_[t[2]] - vertices_[t[0]]));
}

LandmarkSet::LandmarkSet(std::vector<Landmark> entries) : entries_(std::move(entries)) {
  std::set<std::string> seen;
  for (const Landmark& l : entries_) {
    if (!seen.insert(l.label).second) throw MeshError("duplicate landmark label '" + l.label + "'");
  }
}

RigidTransform::RigidTransform()
    : rotation_{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}}, translation_{}, scale_(1.0) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation, double scale)
    : rotation_(rotation), translation_(translation), scale_(scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("RigidTransform: scale must be positive");
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double d = 0.0;
      for (int k = 0; k < 3; ++k) d += rotation_[k][i] * rotation_[k][j];
      if (std::abs(d - (i == j ? 1.0 : 0.0)) > 1e-9) {
        throw std::invalid_argument("RigidTransform: rotation columns are not orthonormal");
      }
    }
  }
  const Vec3 c0{rotation_[0][0], rotation_[1][0], rotation_[2][0]};
  const Vec3 c1{rotation_[0][1], rotation_[1][1], rotation_[2][1]};
  const Vec3 c2{rotation_[0][2], rotation_[1][2], rotation_[2][2]};
  if (dot(cross(c0, c1), c2) < 0.0) {
    throw std::invalid_argument("RigidTransform: rotation has determinant -1");
  }
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle,
                                               const Vec3& translation, double scale) {
  const Vec3 u = normalized(axis);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  Mat3 r{{{c + u.x * u.x * t, u.x * u.y * t - u.z * s, u.x * u.z * t + u.y * s},
          {u.y * u.x * t + u.z * s, c + u.y * u.y * t, u.y * u.z * t - u.x * s},
          {u.z * u.x * t - u.y * s, u.z * u.y * t + u.x * s, c + u.z * u.z * t}}};
  return RigidTransform(r, translation, scale);
}

Vec3 RigidTransform::rotate(const Vec3& v) const {
  return {rotation_[0][0] * v.x + rotation_[0][1] * v.y + rotation_[0][2] * v.z,
          rotation_[1][0] * v.x + rotation_[1][1] * v.y + rotation_[1][2] * v.z,
          rotation_[2][0] * v.x + rotation_[2][1] * v.y + rotation_[2][2] * v.z};
}

std::vector<double> distance_field(const TriangleMesh& mesh, const Vec3& r) {
  std::vector<double> out;
  out.reserve(mesh.vertex_count());
  for (const Vec3& v : mesh.vertices()) out.push_back(distance(v, r));
  return out;
}

TriangleMesh apply_transform(const TriangleMesh& mesh, const RigidTransform& t) {
  std::vector<Vec3> verts;
  verts.reserve(mesh.vertex_count());
  const bool identity = t.scale() == 1.0 && t.translation() == Vec3{} &&
                        t.rotation() == RigidTransform().rotation();
  for (const Vec3& v : mesh.vertices()) verts.push_back(identity ? v : t.apply(v));
  return TriangleMesh(std::move(verts), mesh.faces(), mesh.valid());
}

LandmarkSet apply_transform(const LandmarkSet& landmarks, const RigidTransform& t) {
  std::vector<Landmark> out;
  out.reserve(landmarks.size());
  for (const Landmark& l : landmarks.entries()) out.push_back({l.label, t.apply(l.position)});
  return LandmarkSet(std::move(out));
}

std::vector<std::uint32_t> vertex_degrees(const TriangleMesh& mesh) {
  std::vector<std::uint32_t> deg(mesh.vertex_count(), 0);
  for (const auto& [a, b] : mesh.edges()) {
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

std::size_t nearest_vertex(const TriangleMesh& mesh, const Vec3& p) {
  if (mesh.empty()) throw MeshError("nearest_vertex: empty mesh");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3 d = mesh.vertices()[i] - p;
    const double d2 = dot(d, d);
    if (d2 < best_d) {
      best_d = d2;
      best = i;
    }
  }
  return best;
}

LandmarkSet snap_to_vertices(const TriangleMesh& mesh, const LandmarkSet& landmarks) {
  std::vector<Landmark> out;
  out.reserve(landmarks.size());
  for (const Landmark& l : landmarks.entries()) {
    out.push_back({l.label, mesh.vertices()[nearest_vertex(mesh, l.position)]});
  }
  return LandmarkSet(std::move(out));
}

Vec3 vertex_normal(const TriangleMesh& mesh, std::size_t vertex) {
  Vec3 acc{};
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& t = mesh.faces()[f];
    if (t[0] != vertex && t[1] != vertex && t[2] != vertex) continue;
    const auto& v = mesh.vertices();
    acc += cross(v[t[1]] - v[t[0]], v[t[2]] - v[t[0]]);  // |.| = 2 * area
  }
  return normalized(acc);
}

}  // namespace facelap
