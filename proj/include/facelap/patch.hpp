#pragma once

// Level-curve patches around landmarks. Each patch is 1 apex plus K closed
// iso-distance curves resampled to m points, so every patch of every scan
// shares one vertex layout and one triangulation.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "facelap/mesh.hpp"

namespace facelap {

struct PatchConfig {
  double lambda_min = 5.0;   // mm
  double lambda_max = 20.0;  // mm
  std::size_t curves = 15;   // K
  std::size_t samples = 50;  // m, points per curve

  void validate() const;  // throws std::invalid_argument
  double level(std::size_t k) const;
  std::size_t vertex_count() const { return 1 + curves * samples; }
  friend bool operator==(const PatchConfig&, const PatchConfig&) = default;
};

enum class PatchFrame {
  ApexCentered,   // translate apex to origin only
  NormalAligned,  // additionally rotate apex normal to +z and curve-0 start to +x
};

struct PatchOptions {
  PatchFrame frame = PatchFrame::ApexCentered;
  // Start points maximise the projection onto this axis. Callers that move a
  // mesh rigidly should move the axis with it.
  Vec3 reference_axis{1.0, 0.0, 0.0};
};

class PatchError : public std::runtime_error {
 public:
  enum class Kind {
    LevelAbsent,  // the iso-level does not surround the landmark
    Ambiguous,    // several closed components, none (or more than one) enclosing
    OpenContour,  // contour runs into the mesh border (hole, open mouth)
    Degenerate,   // zero-length curve
  };
  PatchError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Closed polyline; the last point connects back to the first.
struct LevelCurve {
  std::vector<Vec3> points;
  double lambda = 0.0;
};

// Marching-triangles extraction of {p on mesh : |p - r| = lambda}.
// Reusable across landmarks and levels of one mesh.
class LevelSetExtractor {
 public:
  explicit LevelSetExtractor(const TriangleMesh& mesh);

  // `dist` is distance_field(mesh, r); `seed` a vertex inside the level set
  // (normally the vertex nearest to r); `normal` orients the winding test.
  LevelCurve extract(const Vec3& r, double lambda, std::span<const double> dist, std::size_t seed,
                     const Vec3& normal, const std::string& label = {}) const;

  const TriangleMesh& mesh() const { return *mesh_; }

 private:
  const TriangleMesh* mesh_;
  std::vector<std::uint32_t> adj_offsets_;  // CSR vertex -> neighbour vertices
  std::vector<std::uint32_t> adj_;
  std::vector<std::uint32_t> vf_offsets_;   // CSR vertex -> incident faces
  std::vector<std::uint32_t> vf_;
};

LevelCurve extract_level_curve(const TriangleMesh& mesh, const Vec3& r, double lambda,
                               const std::string& label = {});

// m points at equal arclength along a closed polyline, starting at points[0].
std::vector<Vec3> resample_uniform(std::span<const Vec3> closed_polyline, std::size_t m);

struct CanonicalPatch {
  std::string label;
  // 1 + K*m points: apex at 0, curve k sample j at 1 + k*m + j.
  std::vector<Vec3> vertices;
  bool missing = false;
  std::string error;  // why the patch is missing
};

// Throws PatchError (with landmark label and lambda in the message) when any
// level cannot be extracted.
CanonicalPatch build_patch(const TriangleMesh& mesh, const Landmark& landmark, const PatchConfig& cfg,
                           const PatchOptions& opts = {});

// One patch per landmark. Failed patches are zero-filled and flagged missing.
std::vector<CanonicalPatch> extract_patches(const TriangleMesh& mesh, const LandmarkSet& landmarks,
                                            const PatchConfig& cfg, const PatchOptions& opts = {});

// Shared triangulation: apex fan of m triangles, then a closed strip of 2m
// triangles between consecutive curves (each quad split along in_j-out_{j+1}).
std::vector<Face> canonical_connectivity(const PatchConfig& cfg);

}  // namespace facelap
