#include "facelap/features.hpp"

#include <cmath>
#include <stdexcept>

#include "facelap/kernels.hpp"

namespace facelap {

std::string to_string(FeatureMethod m) { return m == FeatureMethod::Glf ? "glf" : "shapedna"; }
std::string to_string(FeatureMode m) { return m == FeatureMode::Coords ? "coords" : "norms"; }

FeatureMethod parse_feature_method(const std::string& s) {
  if (s == "glf") return FeatureMethod::Glf;
  if (s == "shapedna" || s == "shape-dna") return FeatureMethod::ShapeDna;
  throw std::invalid_argument("unknown feature method '" + s + "' (expected glf or shapedna)");
}

FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "coords") return FeatureMode::Coords;
  if (s == "norms") return FeatureMode::Norms;
  throw std::invalid_argument("unknown feature mode '" + s + "' (expected coords or norms)");
}

GlfProjector::GlfProjector(const SpectralBasis& basis)
    : n_(basis.dimension()), k_(basis.size()), rows_(basis.eigenvectors.transposed()) {}

GlfCoefficients GlfProjector::project(std::span<const Vec3> vertices, std::size_t k) const {
  if (vertices.size() != n_) {
    throw std::invalid_argument("glf_project: patch has " + std::to_string(vertices.size()) +
                                " vertices but the basis dimension is " + std::to_string(n_));
  }
  if (k > k_) {
    throw std::invalid_argument("glf_project: k = " + std::to_string(k) + " exceeds basis size " +
                                std::to_string(k_));
  }
  std::vector<double> channel[3];
  for (int c = 0; c < 3; ++c) {
    channel[c].resize(n_);
    for (std::size_t i = 0; i < n_; ++i) channel[c][i] = vertices[i][c];
  }
  const auto& kern = simd::active();
  GlfCoefficients out(k, 3);
  for (std::size_t i = 0; i < k; ++i) {
    const double* ev = rows_.row(i).data();
    for (int c = 0; c < 3; ++c) out(i, c) = kern.dot(ev, channel[c].data(), n_);
  }
  return out;
}

GlfCoefficients glf_project(const CanonicalPatch& patch, const SpectralBasis& basis, std::size_t k) {
  return GlfProjector(basis).project(patch.vertices, k);
}

std::vector<double> glf_norms(const GlfCoefficients& coeffs) {
  std::vector<double> out(coeffs.rows());
  for (std::size_t i = 0; i < coeffs.rows(); ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < coeffs.cols(); ++c) s += coeffs(i, c) * coeffs(i, c);
    out[i] = std::sqrt(s);
  }
  return out;
}

std::vector<Vec3> glf_reconstruct(const GlfCoefficients& coeffs, const SpectralBasis& basis, std::size_t k) {
  const std::size_t n = basis.dimension();
  std::vector<Vec3> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      const double e = basis.eigenvectors(r, i);
      out[r] += Vec3{coeffs(i, 0), coeffs(i, 1), coeffs(i, 2)} * e;
    }
  }
  return out;
}

std::size_t channels_per_eigen(FeatureMethod method, FeatureMode mode) {
  return method == FeatureMethod::Glf && mode == FeatureMode::Coords ? 3 : 1;
}

FaceFeatureVector assemble_face(const std::vector<std::vector<double>>& patches,
                                std::span<const std::uint8_t> missing, FeatureMethod method,
                                FeatureMode mode) {
  if (missing.size() != patches.size()) throw std::invalid_argument("assemble_face: mask length mismatch");
  std::size_t block = 0;
  for (std::size_t l = 0; l < patches.size(); ++l) {
    if (missing[l]) continue;
    if (block == 0) block = patches[l].size();
    if (patches[l].size() != block) {
      throw std::invalid_argument("assemble_face: landmark " + std::to_string(l) + " has " +
                                  std::to_string(patches[l].size()) + " features, expected " +
                                  std::to_string(block));
    }
  }
  if (block == 0) {
    // All missing: take the declared length of any block.
    for (const auto& p : patches) block = std::max(block, p.size());
  }
  FaceFeatureVector out;
  out.method = method;
  out.mode = mode;
  out.block_size = block;
  out.values.assign(block * patches.size(), 0.0);
  out.missing.assign(missing.begin(), missing.end());
  for (std::size_t l = 0; l < patches.size(); ++l) {
    if (missing[l]) continue;
    std::copy(patches[l].begin(), patches[l].end(), out.values.begin() + static_cast<std::ptrdiff_t>(l * block));
  }
  return out;
}

std::vector<std::string> feature_names(std::size_t landmarks, std::size_t k, FeatureMethod method,
                                       FeatureMode mode) {
  std::vector<std::string> names;
  names.reserve(landmarks * k * channels_per_eigen(method, mode));
  static const char* axis[3] = {"x", "y", "z"};
  for (std::size_t l = 0; l < landmarks; ++l) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::string base = "L" + std::to_string(l) + "_e" + std::to_string(i);
      if (method == FeatureMethod::ShapeDna) names.push_back(base);
      else if (mode == FeatureMode::Norms) names.push_back(base + "_n");
      else
        for (const char* a : axis) names.push_back(base + "_" + a);
    }
  }
  return names;
}

}  // namespace facelap
