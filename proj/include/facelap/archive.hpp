#pragma once

// On-disk artifacts passed between pipeline stages: patch archives, the
// shared basis file and feature tables.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "facelap/features.hpp"
#include "facelap/labels.hpp"
#include "facelap/patch.hpp"
#include "facelap/spectral.hpp"

namespace facelap {

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a basis file was built for a different (K, m).
class BasisMismatchError : public ArchiveError {
 public:
  using ArchiveError::ArchiveError;
};

// ------------------------------------------------------------ patches

struct PatchArchive {
  PatchConfig config;
  std::string scan;  // free-form scan identifier
  std::vector<CanonicalPatch> patches;
};

// <path> gets the binary payload (or CSV when the extension is .csv) and
// <path>.json the metadata sidecar.
void save_patch_archive(const PatchArchive& archive, const std::filesystem::path& path);
PatchArchive load_patch_archive(const std::filesystem::path& path);

// ------------------------------------------------------------ basis

// Layout (little-endian): "FLBASIS1", u64 n, u64 k, u64 config hash,
// n*k f64 eigenvectors row-major, k f64 eigenvalues.
void save_basis(const SpectralBasis& basis, const PatchConfig& cfg, const std::filesystem::path& path);
SpectralBasis load_basis(const std::filesystem::path& path, const PatchConfig& expected);

// ------------------------------------------------------------ features

struct FeatureTable {
  FeatureMethod method = FeatureMethod::Glf;
  FeatureMode mode = FeatureMode::Coords;
  std::size_t k = 0;
  PatchConfig patch;
  std::vector<std::string> landmark_labels;
  std::vector<SampleInfo> samples;
  std::vector<std::string> scans;              // mesh path per row
  std::vector<std::vector<std::uint8_t>> missing;  // per row, per landmark
  Matrix values;                               // rows = samples

  std::size_t landmarks() const { return landmark_labels.size(); }
  std::size_t channels() const { return channels_per_eigen(method, mode); }
  std::size_t columns() const { return landmarks() * k * channels(); }
  std::vector<std::string> column_names() const { return feature_names(landmarks(), k, method, mode); }

  // Keeps the first k' <= k eigen indices of every landmark block.
  FeatureTable slice(std::size_t k_new) const;
  // Rows whose index is listed, in that order.
  FeatureTable select(std::span<const std::size_t> rows) const;

  std::vector<int> expressions() const;
  std::vector<AuMask> aus() const;
  std::vector<std::string> subjects() const;
  void check() const;  // structural consistency, throws ArchiveError
};

// Writes <base>.bin (raw f64 row-major) and <base>.json (metadata). When
// `csv` is set, also <base>.csv with named columns.
void save_feature_table(const FeatureTable& table, const std::filesystem::path& base, bool csv = false);
// Accepts <base>, <base>.json, <base>.bin or a .csv file.
FeatureTable load_feature_table(const std::filesystem::path& path);
void save_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable load_feature_csv(const std::filesystem::path& path);

}  // namespace facelap
