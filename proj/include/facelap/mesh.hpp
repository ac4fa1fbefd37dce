#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace facelap {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }
inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return n > 0.0 ? a * (1.0 / n) : a;
}

using Face = std::array<std::uint32_t, 3>;
using Edge = std::pair<std::uint32_t, std::uint32_t>;  // first < second

// Raised when a mesh violates a structural invariant.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the file readers; the message names the file and the line or byte offset.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Indexed triangle soup in millimetres. Immutable after construction;
// the constructor enforces index range and non-degenerate index triples.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  TriangleMesh(std::vector<Vec3> vertices, std::vector<Face> faces,
               std::vector<std::uint8_t> valid = {});

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  // Empty when the source carried no validity flags.
  const std::vector<std::uint8_t>& valid() const { return valid_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }
  bool empty() const { return vertices_.empty(); }

  // Undirected edges derived from faces, sorted, no duplicates.
  std::vector<Edge> edges() const;

  double face_area(std::size_t f) const;
  Vec3 face_normal(std::size_t f) const;  // unit, from winding order

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<std::uint8_t> valid_;
};

struct Landmark {
  std::string label;
  Vec3 position;
};

// Ordered landmark annotation with unique labels.
class LandmarkSet {
 public:
  LandmarkSet() = default;
  explicit LandmarkSet(std::vector<Landmark> entries);

  const std::vector<Landmark>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const Landmark& operator[](std::size_t i) const { return entries_[i]; }

 private:
  std::vector<Landmark> entries_;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

// x -> scale * R x + t
class RigidTransform {
 public:
  RigidTransform();
  RigidTransform(const Mat3& rotation, const Vec3& translation, double scale = 1.0);

  static RigidTransform from_axis_angle(const Vec3& axis, double angle,
                                        const Vec3& translation = {}, double scale = 1.0);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }
  double scale() const { return scale_; }

  Vec3 rotate(const Vec3& v) const;
  Vec3 apply(const Vec3& p) const { return rotate(p) * scale_ + translation_; }

 private:
  Mat3 rotation_;
  Vec3 translation_;
  double scale_;
};

enum class MeshFormat { Obj, Ply };

// Picks the format from the extension (.obj / .ply).
MeshFormat format_from_path(const std::filesystem::path& path);

TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                       double unit_scale = 1.0);
TriangleMesh load_mesh(const std::filesystem::path& path, double unit_scale = 1.0);
TriangleMesh parse_obj(std::string_view text, const std::string& source = "<memory>");
TriangleMesh parse_ply(std::span<const char> bytes, const std::string& source = "<memory>");

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path);
// ASCII or binary little-endian PLY.
void save_ply(const TriangleMesh& mesh, const std::filesystem::path& path, bool binary);

// CSV with header `label,x,y,z`.
LandmarkSet load_landmarks(const std::filesystem::path& path, double unit_scale = 1.0);
LandmarkSet parse_landmarks(std::string_view text, const std::string& source = "<memory>");
void save_landmarks(const LandmarkSet& landmarks, const std::filesystem::path& path);

// Euclidean distance from each vertex to r.
std::vector<double> distance_field(const TriangleMesh& mesh, const Vec3& r);

TriangleMesh apply_transform(const TriangleMesh& mesh, const RigidTransform& t);
LandmarkSet apply_transform(const LandmarkSet& landmarks, const RigidTransform& t);

// Number of distinct undirected edges incident to each vertex.
std::vector<std::uint32_t> vertex_degrees(const TriangleMesh& mesh);

std::size_t nearest_vertex(const TriangleMesh& mesh, const Vec3& p);

// Replaces each landmark position by its nearest mesh vertex.
LandmarkSet snap_to_vertices(const TriangleMesh& mesh, const LandmarkSet& landmarks);

// Unit normal at a vertex: area-weighted average of incident face normals.
Vec3 vertex_normal(const TriangleMesh& mesh, std::size_t vertex);

}  // namespace facelap
