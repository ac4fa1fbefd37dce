#pragma once

// Per-patch spectral descriptors and their per-face concatenation.

#include <span>
#include <string>
#include <vector>

#include "facelap/linalg.hpp"
#include "facelap/patch.hpp"
#include "facelap/spectral.hpp"

namespace facelap {

enum class FeatureMethod { Glf, ShapeDna };
enum class FeatureMode {
  Coords,  // GLF: k x 3 projection coefficients per patch
  Norms,   // GLF: k per-row Euclidean norms (rotation invariant)
};

std::string to_string(FeatureMethod m);
std::string to_string(FeatureMode m);
FeatureMethod parse_feature_method(const std::string& s);
FeatureMode parse_feature_mode(const std::string& s);

// k x 3 projections of the x, y, z coordinate functions onto basis vectors.
using GlfCoefficients = Matrix;

// Projects patches onto a shared basis. Holds the basis transposed so each
// eigenvector is contiguous.
class GlfProjector {
 public:
  explicit GlfProjector(const SpectralBasis& basis);

  std::size_t dimension() const { return n_; }
  std::size_t size() const { return k_; }

  GlfCoefficients project(std::span<const Vec3> vertices, std::size_t k) const;

 private:
  std::size_t n_;
  std::size_t k_;
  Matrix rows_;  // k x n
};

GlfCoefficients glf_project(const CanonicalPatch& patch, const SpectralBasis& basis, std::size_t k);

std::vector<double> glf_norms(const GlfCoefficients& coeffs);

// Inverse of the projection with the first k coefficients (test/diagnostic aid).
std::vector<Vec3> glf_reconstruct(const GlfCoefficients& coeffs, const SpectralBasis& basis, std::size_t k);

// Values per eigen index within a patch block.
std::size_t channels_per_eigen(FeatureMethod method, FeatureMode mode);

struct FaceFeatureVector {
  FeatureMethod method = FeatureMethod::Glf;
  FeatureMode mode = FeatureMode::Coords;
  std::size_t block_size = 0;         // reals per landmark
  std::vector<double> values;         // landmark blocks in landmark order
  std::vector<std::uint8_t> missing;  // one flag per landmark
};

// Concatenates per-landmark blocks; missing blocks are zero-filled.
// Non-missing blocks must share one length.
FaceFeatureVector assemble_face(const std::vector<std::vector<double>>& patches,
                                std::span<const std::uint8_t> missing, FeatureMethod method,
                                FeatureMode mode);

// Feature column names: L{landmark}_e{i}_{x|y|z} (coords), L{landmark}_e{i}_n
// (norms) or L{landmark}_e{i} (Shape-DNA).
std::vector<std::string> feature_names(std::size_t landmarks, std::size_t k, FeatureMethod method,
                                       FeatureMode mode);

}  // namespace facelap
