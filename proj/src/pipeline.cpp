#include "facelap/pipeline.hpp"

#include "facelap/parallel.hpp"

namespace facelap {

void FeatureJob::validate() const {
  patch.validate();
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  const std::size_t n = patch.vertex_count();
  // Shape-DNA drops the zero eigenvalue, leaving n - 1.
  const std::size_t limit = method == FeatureMethod::ShapeDna ? n - 1 : n;
  if (k > limit)
    throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " + std::to_string(limit) +
                                " eigenpairs available for this patch configuration");
  if (method == FeatureMethod::ShapeDna && mode != FeatureMode::Coords)
    throw std::invalid_argument("feature mode 'norms' applies to GLF only");
  if (!(unit_scale > 0.0)) throw std::invalid_argument("unit scale must be positive");
}

FaceFeatureVector scan_features(const TriangleMesh& mesh, const LandmarkSet& landmarks, const FeatureJob& job,
                                const SpectralBasis* basis, std::vector<CanonicalPatch>* patches_out) {
  std::vector<CanonicalPatch> patches = extract_patches(mesh, landmarks, job.patch, job.options);
  std::vector<std::vector<double>> blocks(patches.size());
  std::vector<std::uint8_t> missing(patches.size(), 0);
  const std::size_t block = job.k * channels_per_eigen(job.method, job.mode);
  std::optional<GlfProjector> projector;
  std::vector<Face> faces;
  if (job.method == FeatureMethod::Glf) {
    if (!basis) throw std::invalid_argument("GLF features need a basis");
    if (basis->size() < job.k)
      throw std::invalid_argument("basis holds " + std::to_string(basis->size()) + " vectors, k = " +
                                  std::to_string(job.k) + " requested");
    projector.emplace(*basis);
  } else {
    faces = canonical_connectivity(job.patch);
  }
  for (std::size_t l = 0; l < patches.size(); ++l) {
    const CanonicalPatch& p = patches[l];
    if (p.missing) {
      missing[l] = 1;
      blocks[l].assign(block, 0.0);
      continue;
    }
    if (job.method == FeatureMethod::ShapeDna) {
      try {
        blocks[l] = shape_dna(p, faces, job.k, job.mass);
      } catch (const DegenerateGeometryError& e) {
        // Collapsed sample triangles make the patch unusable; treat as missing.
        missing[l] = 1;
        blocks[l].assign(block, 0.0);
        patches[l].missing = true;
        patches[l].error = e.what();
      }
      continue;
    }
    const GlfCoefficients c = projector->project(p.vertices, job.k);
    if (job.mode == FeatureMode::Norms) {
      blocks[l] = glf_norms(c);
    } else {
      blocks[l].assign(c.data().begin(), c.data().end());  // row-major: e0 x,y,z, e1 x,y,z, ...
    }
  }
  if (patches_out) *patches_out = std::move(patches);
  return assemble_face(blocks, missing, job.method, job.mode);
}

FeatureRun extract_features(const DatasetManifest& manifest, const FeatureJob& job, const SpectralBasis* basis) {
  job.validate();
  const std::size_t n = manifest.records.size();
  struct Slot {
    std::optional<FaceFeatureVector> features;
    std::vector<std::string> labels;
    std::string error;
  };
  std::vector<Slot> slots(n);
  parallel_for(n, job.jobs, [&](std::size_t i) {
    const auto& r = manifest.records[i];
    try {
      const TriangleMesh mesh = load_mesh(manifest.resolve(r.mesh), job.unit_scale);
      LandmarkSet lms = load_landmarks(manifest.resolve(r.landmarks), job.unit_scale);
      if (job.snap_landmarks) lms = snap_to_vertices(mesh, lms);
      std::vector<CanonicalPatch> patches;
      slots[i].features = scan_features(mesh, lms, job, basis, job.patch_dir ? &patches : nullptr);
      for (const auto& l : lms.entries()) slots[i].labels.push_back(l.label);
      if (job.patch_dir) {
        PatchArchive a{job.patch, r.mesh.generic_string(), std::move(patches)};
        const std::string stem = r.mesh.stem().string();
        save_patch_archive(a, *job.patch_dir / (stem + ".patches"));
      }
    } catch (const std::exception& e) {
      slots[i].features.reset();
      slots[i].error = e.what();
    }
  });

  FeatureRun run;
  FeatureTable& t = run.table;
  t.method = job.method;
  t.mode = job.mode;
  t.k = job.k;
  t.patch = job.patch;
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = manifest.records[i];
    if (!slots[i].features) {
      run.errors.push_back({"features", r.mesh.generic_string(), slots[i].error});
      continue;
    }
    if (t.landmark_labels.empty()) t.landmark_labels = slots[i].labels;
    if (slots[i].labels != t.landmark_labels) {
      run.errors.push_back({"features", r.mesh.generic_string(),
                            "landmark labels differ from the first scan (" + std::to_string(slots[i].labels.size()) +
                                " vs " + std::to_string(t.landmark_labels.size()) + " landmarks)"});
      continue;
    }
    ok.push_back(i);
  }
  t.values = Matrix(ok.size(), t.columns());
  for (std::size_t row = 0; row < ok.size(); ++row) {
    const auto& r = manifest.records[ok[row]];
    const auto& f = *slots[ok[row]].features;
    t.samples.push_back(r.info());
    t.scans.push_back(r.mesh.generic_string());
    t.missing.push_back(f.missing);
    for (auto m : f.missing) run.missing_patches += m;
    std::copy(f.values.begin(), f.values.end(), t.values.row(row).begin());
  }
  return run;
}

}  // namespace facelap
