#pragma once

// Dataset manifests (CSV / JSON), a BU-3DFE-style directory adapter, and the
// synthetic face-scan generator.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "facelap/labels.hpp"
#include "facelap/mesh.hpp"

namespace facelap {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ManifestRecord {
  std::string subject;
  int expression = -1;
  int intensity = 0;
  std::filesystem::path mesh;       // absolute or relative to the manifest
  std::filesystem::path landmarks;
  AuMask aus = 0;
  bool has_aus = false;

  SampleInfo info() const { return {subject, expression, intensity, aus}; }
};

struct DatasetManifest {
  std::filesystem::path base_dir;  // relative paths resolve against this
  std::vector<ManifestRecord> records;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }
};

inline constexpr int kMaxIntensity = 4;

// CSV (header subject,expression,intensity,mesh,landmarks,aus) or JSON
// ({"records": [{...}]} or a bare array), chosen by extension. Duplicated
// (subject, expression, intensity) triples are rejected.
DatasetManifest load_manifest(const std::filesystem::path& path, bool check_paths = true);
DatasetManifest parse_manifest_csv(std::string_view text, const std::string& source = "<memory>");
DatasetManifest parse_manifest_json(std::string_view text, const std::string& source = "<memory>");
void validate_manifest(const DatasetManifest& manifest, bool check_paths);

void save_manifest_csv(const DatasetManifest& manifest, const std::filesystem::path& path);

// Sorted by (subject, expression, intensity).
void sort_records(DatasetManifest& manifest);

// Walks a directory for files named <subject>_<EXPR><level><race>_F3D.<obj|ply>
// (for example F0001_HA02WH_F3D.obj) with landmarks in <stem>.csv next to each
// mesh. Neutral scans are skipped.
DatasetManifest scan_bu3dfe(const std::filesystem::path& root);

// ------------------------------------------------------------ synthesis

struct SynthConfig {
  std::size_t subjects = 10;
  std::vector<int> expressions = {0, 1, 2, 3, 4, 5};
  std::vector<int> levels = {1, 2};
  double resolution = 2.2;       // mm, approximate grid spacing
  double amplitude_min = 1.6;    // mm, per-AU level-1 bump amplitude range
  double amplitude_max = 2.4;
  double bump_sigma = 8.0;       // mm
  double subject_variation = 1.0;  // scales all identity perturbations
  double dropout = 0.2;          // probability of dropping a non-core AU
  double vertex_jitter = 0.0;    // mm, optional Gaussian vertex noise
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct SynthScan {
  std::string subject;
  int expression = -1;  // -1 for the neutral face
  int intensity = 0;
  AuMask aus = 0;
  TriangleMesh mesh;
  LandmarkSet landmarks;
};

inline constexpr std::size_t kSynthLandmarks = 68;

// Labels of the generated landmarks, in order.
std::vector<std::string> synth_landmark_labels();

// AUs making up each expression, and which of them is never dropped.
AuMask expression_aus(int expression);
int expression_core_au(int expression);

std::string synth_subject_id(std::size_t subject);

SynthScan synth_scan(const SynthConfig& cfg, std::size_t subject, int expression, int level);
SynthScan synth_neutral(const SynthConfig& cfg, std::size_t subject);

// Writes meshes/ (OBJ), landmarks/ (CSV) and manifest.csv under `out`.
DatasetManifest synth_generate(const SynthConfig& cfg, const std::filesystem::path& out, std::size_t jobs = 1);

}  // namespace facelap
