#pragma once

// Small meshes and random data shared by the unit tests and the acceptance
// harness.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "facelap/linalg.hpp"
#include "facelap/mesh.hpp"

namespace facelap::testing {

// (nx+1) x (ny+1) vertices on z = 0, unit squares split along the same
// diagonal, centred on the origin.
inline TriangleMesh grid_mesh(int nx, int ny, double spacing = 1.0) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  const double ox = -0.5 * nx * spacing;
  const double oy = -0.5 * ny * spacing;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) v.push_back({ox + i * spacing, oy + j * spacing, 0.0});
  auto id = [nx](int i, int j) { return static_cast<std::uint32_t>(j * (nx + 1) + i); };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriangleMesh(std::move(v), std::move(f));
}

// Latitude/longitude sphere with poles, outward winding.
inline TriangleMesh sphere_mesh(double radius, int rings, int segments) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  v.push_back({0, 0, radius});
  for (int r = 1; r < rings; ++r) {
    const double th = std::numbers::pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double ph = 2.0 * std::numbers::pi * s / segments;
      v.push_back({radius * std::sin(th) * std::cos(ph), radius * std::sin(th) * std::sin(ph), radius * std::cos(th)});
    }
  }
  v.push_back({0, 0, -radius});
  const auto south = static_cast<std::uint32_t>(v.size() - 1);
  auto id = [segments](int r, int s) { return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments)); };
  for (int s = 0; s < segments; ++s) f.push_back({0, id(1, s), id(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      f.push_back({id(r, s), id(r + 1, s), id(r + 1, s + 1)});
      f.push_back({id(r, s), id(r + 1, s + 1), id(r, s + 1)});
    }
  }
  for (int s = 0; s < segments; ++s) f.push_back({id(rings - 1, s), south, id(rings - 1, s + 1)});
  return TriangleMesh(std::move(v), std::move(f));
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = g(rng);
  return m;
}

inline Matrix random_symmetric(std::size_t n, std::mt19937_64& rng) {
  Matrix a = random_matrix(n, n, rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
  return a;
}

inline RigidTransform random_rigid(std::mt19937_64& rng, double scale = 1.0, double shift = 50.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> t(-shift, shift);
  const Vec3 axis{g(rng), g(rng), g(rng)};
  return RigidTransform::from_axis_angle(axis, u(rng), {t(rng), t(rng), t(rng)}, scale);
}

inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("facelap_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace facelap::testing
