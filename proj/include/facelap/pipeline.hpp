#pragma once

// Scan-level orchestration: manifest -> patches -> feature table.

#include <filesystem>
#include <optional>
#include <vector>

#include "facelap/archive.hpp"
#include "facelap/dataset.hpp"
#include "facelap/report.hpp"

namespace facelap {

struct FeatureJob {
  PatchConfig patch;
  PatchOptions options;
  FeatureMethod method = FeatureMethod::Glf;
  FeatureMode mode = FeatureMode::Coords;
  std::size_t k = 50;
  MassScheme mass = MassScheme::MixedVoronoi;
  double unit_scale = 1.0;
  bool snap_landmarks = false;
  std::size_t jobs = 1;
  std::optional<std::filesystem::path> patch_dir;  // write one patch archive per scan

  void validate() const;
};

struct FeatureRun {
  FeatureTable table;            // successful scans only, manifest order
  std::vector<RunError> errors;  // scans that could not be processed
  std::size_t missing_patches = 0;
};

// Per-landmark feature blocks of one scan. `basis` is required for GLF.
FaceFeatureVector scan_features(const TriangleMesh& mesh, const LandmarkSet& landmarks, const FeatureJob& job,
                                const SpectralBasis* basis, std::vector<CanonicalPatch>* patches_out = nullptr);

// Failures of single scans are collected in `errors`; the run continues.
FeatureRun extract_features(const DatasetManifest& manifest, const FeatureJob& job, const SpectralBasis* basis);

}  // namespace facelap
