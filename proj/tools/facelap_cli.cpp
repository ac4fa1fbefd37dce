// facelap: synth | basis | features | evaluate

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "facelap/archive.hpp"
#include "facelap/dataset.hpp"
#include "facelap/experiment.hpp"
#include "facelap/pipeline.hpp"

using namespace facelap;
namespace fs = std::filesystem;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitPartial = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand.
struct Common {
  std::string config;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  std::string out;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c, bool out_required, const std::string& out_help) {
  cmd->add_option("--config", c.config, "JSON file overriding defaults (flags override the file)")
      ->check(CLI::ExistingFile);
  c.seed_opt = cmd->add_option("--seed", c.seed, "Random seed");
  c.jobs_opt = cmd->add_option("--jobs", c.jobs, "Worker threads (0 = all cores)");
  auto* o = cmd->add_option("--out", c.out, out_help);
  if (out_required) o->required();
}

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  try {
    Json j = Json::parse(in);
    if (!j.is_object()) throw UsageError(path + ": config must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// Value precedence: explicit flag > config file > built-in default.
template <typename T>
void merge(T& target, const Json& cfg, const char* key, const CLI::Option* flag) {
  if (flag && flag->count() > 0) return;
  if (cfg.contains(key)) {
    try {
      target = cfg[key].get<T>();
    } catch (const Json::exception& e) {
      throw UsageError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

struct PatchFlags {
  PatchConfig cfg;
  CLI::Option *lmin = nullptr, *lmax = nullptr, *curves = nullptr, *samples = nullptr;

  void add(CLI::App* cmd) {
    lmin = cmd->add_option("--lambda-min", cfg.lambda_min, "Innermost level-curve radius (mm)");
    lmax = cmd->add_option("--lambda-max", cfg.lambda_max, "Outermost level-curve radius (mm)");
    curves = cmd->add_option("--curves", cfg.curves, "Level curves per patch (K)");
    samples = cmd->add_option("--samples", cfg.samples, "Samples per level curve (m)");
  }
  void merge_config(const Json& root) {
    const Json p = root.value("patch", Json::object());
    merge(cfg.lambda_min, p, "lambda_min", lmin);
    merge(cfg.lambda_max, p, "lambda_max", lmax);
    merge(cfg.curves, p, "curves", curves);
    merge(cfg.samples, p, "samples", samples);
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  Json to_json() const {
    return {{"lambda_min", cfg.lambda_min}, {"lambda_max", cfg.lambda_max}, {"curves", cfg.curves},
            {"samples", cfg.samples}};
  }
};

void write_json(const fs::path& path, const Json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot write");
  out << j.dump(2) << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ------------------------------------------------------------ synth

struct SynthArgs {
  Common common;
  SynthConfig cfg;
  std::vector<std::string> expressions;
  CLI::Option *subjects = nullptr, *levels = nullptr, *expr = nullptr, *res = nullptr, *amin = nullptr,
              *amax = nullptr, *sigma = nullptr, *variation = nullptr, *dropout = nullptr, *jitter = nullptr;
};

void setup_synth(CLI::App& app, SynthArgs& a) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic labelled face-scan dataset");
  add_common(cmd, a.common, true, "Output directory (created if missing)");
  a.subjects = cmd->add_option("--subjects", a.cfg.subjects, "Number of subjects");
  a.levels = cmd->add_option("--levels", a.cfg.levels, "Intensity levels, e.g. 1,2")->delimiter(',');
  a.expr = cmd->add_option("--expressions", a.expressions, "Expression codes, e.g. AN,HA")->delimiter(',');
  a.res = cmd->add_option("--resolution", a.cfg.resolution, "Grid spacing (mm)");
  a.amin = cmd->add_option("--amplitude-min", a.cfg.amplitude_min, "Smallest level-1 bump amplitude (mm)");
  a.amax = cmd->add_option("--amplitude-max", a.cfg.amplitude_max, "Largest level-1 bump amplitude (mm)");
  a.sigma = cmd->add_option("--sigma", a.cfg.bump_sigma, "Bump width (mm)");
  a.variation = cmd->add_option("--variation", a.cfg.subject_variation, "Scale of identity perturbations");
  a.dropout = cmd->add_option("--dropout", a.cfg.dropout, "Probability of dropping a non-core AU");
  a.jitter = cmd->add_option("--jitter", a.cfg.vertex_jitter, "Gaussian vertex noise (mm)");
}

int run_synth(SynthArgs& a) {
  const Json cfg = load_config(a.common.config);
  const Json s = cfg.value("synth", Json::object());
  merge(a.cfg.subjects, s, "subjects", a.subjects);
  merge(a.cfg.levels, s, "levels", a.levels);
  merge(a.expressions, s, "expressions", a.expr);
  merge(a.cfg.resolution, s, "resolution", a.res);
  merge(a.cfg.amplitude_min, s, "amplitude_min", a.amin);
  merge(a.cfg.amplitude_max, s, "amplitude_max", a.amax);
  merge(a.cfg.bump_sigma, s, "sigma", a.sigma);
  merge(a.cfg.subject_variation, s, "variation", a.variation);
  merge(a.cfg.dropout, s, "dropout", a.dropout);
  merge(a.cfg.vertex_jitter, s, "jitter", a.jitter);
  merge(a.common.seed, cfg, "seed", a.common.seed_opt);
  merge(a.common.jobs, cfg, "jobs", a.common.jobs_opt);
  a.cfg.seed = a.common.seed;
  if (!a.expressions.empty()) {
    a.cfg.expressions.clear();
    for (const auto& code : a.expressions) {
      const auto e = expression_index(code);
      if (!e) throw UsageError("unknown expression '" + code + "'");
      a.cfg.expressions.push_back(*e);
    }
  }
  try {
    a.cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const DatasetManifest m = synth_generate(a.cfg, a.common.out, a.common.jobs);
  std::cout << "wrote " << m.records.size() << " scans and " << (fs::path(a.common.out) / "manifest.csv").string()
            << " in " << seconds_since(t0) << " s\n";
  return 0;
}

// ------------------------------------------------------------ basis

struct BasisArgs {
  Common common;
  PatchFlags patch;
  std::size_t k = 0;
  CLI::Option* k_opt = nullptr;
};

void setup_basis(CLI::App& app, BasisArgs& a) {
  auto* cmd = app.add_subcommand("basis", "Compute the shared graph-Laplacian basis of the canonical patch");
  add_common(cmd, a.common, true, "Basis file to write");
  a.patch.add(cmd);
  a.k_opt = cmd->add_option("-k,--k", a.k, "Eigenvectors to keep (default: all)");
}

int run_basis(BasisArgs& a) {
  const Json cfg = load_config(a.common.config);
  a.patch.merge_config(cfg);
  merge(a.k, cfg, "basis_k", a.k_opt);
  const std::size_t n = a.patch.cfg.vertex_count();
  const std::size_t k = a.k == 0 ? n : a.k;
  if (k > n) throw UsageError("k = " + std::to_string(k) + " exceeds the basis dimension " + std::to_string(n));
  const auto t0 = std::chrono::steady_clock::now();
  const SpectralBasis b = glf_basis(a.patch.cfg, k);
  save_basis(b, a.patch.cfg, a.common.out);
  std::cout << "basis: n = " << n << ", k = " << k << " -> " << a.common.out << " (" << seconds_since(t0)
            << " s)\n";
  return 0;
}

// ------------------------------------------------------------ features

struct FeatureArgs {
  Common common;
  PatchFlags patch;
  std::string manifest, bu3dfe, basis, method = "glf", mode = "coords", mass = "voronoi", frame = "apex",
                                     patches_dir;
  std::size_t k = 50;
  double unit_scale = 1.0;
  bool snap = false, csv = false;
  CLI::Option *method_opt = nullptr, *mode_opt = nullptr, *k_opt = nullptr, *mass_opt = nullptr,
              *frame_opt = nullptr, *scale_opt = nullptr;
};

void setup_features(CLI::App& app, FeatureArgs& a) {
  auto* cmd = app.add_subcommand("features", "Extract patches and spectral features for a dataset");
  add_common(cmd, a.common, true, "Output base path (<out>.bin, <out>.json, <out>.run.json)");
  a.patch.add(cmd);
  auto* src = cmd->add_option_group("source");
  src->add_option("--manifest", a.manifest, "Dataset manifest (CSV or JSON)")->check(CLI::ExistingFile);
  src->add_option("--bu3dfe", a.bu3dfe, "BU-3DFE-style directory")->check(CLI::ExistingDirectory);
  src->require_option(1);
  cmd->add_option("--basis", a.basis, "Basis file from 'basis' (GLF only)")->check(CLI::ExistingFile);
  a.method_opt = cmd->add_option("--method", a.method, "glf or shapedna")->check(CLI::IsMember({"glf", "shapedna"}));
  a.mode_opt = cmd->add_option("--mode", a.mode, "GLF coords or norms")->check(CLI::IsMember({"coords", "norms"}));
  a.k_opt = cmd->add_option("-k,--k", a.k, "Eigen components per patch");
  a.mass_opt = cmd->add_option("--mass", a.mass, "Shape-DNA mass matrix: voronoi or barycentric")
                   ->check(CLI::IsMember({"voronoi", "barycentric"}));
  a.frame_opt = cmd->add_option("--frame", a.frame, "Patch frame: apex or normal")
                    ->check(CLI::IsMember({"apex", "normal"}));
  a.scale_opt = cmd->add_option("--unit-scale", a.unit_scale, "Multiply input coordinates to get millimetres");
  cmd->add_flag("--snap", a.snap, "Snap landmarks to the nearest mesh vertex");
  cmd->add_option("--patches-dir", a.patches_dir, "Also write one patch archive per scan here");
  cmd->add_flag("--csv", a.csv, "Also write <out>.csv with named columns");
}

int run_features(FeatureArgs& a) {
  const Json cfg = load_config(a.common.config);
  a.patch.merge_config(cfg);
  merge(a.method, cfg, "method", a.method_opt);
  merge(a.mode, cfg, "mode", a.mode_opt);
  merge(a.k, cfg, "k", a.k_opt);
  merge(a.mass, cfg, "mass", a.mass_opt);
  merge(a.frame, cfg, "frame", a.frame_opt);
  merge(a.unit_scale, cfg, "unit_scale", a.scale_opt);
  merge(a.common.jobs, cfg, "jobs", a.common.jobs_opt);

  FeatureJob job;
  job.patch = a.patch.cfg;
  job.method = parse_feature_method(a.method);
  job.mode = parse_feature_mode(a.mode);
  job.k = a.k;
  job.mass = a.mass == "barycentric" ? MassScheme::Barycentric : MassScheme::MixedVoronoi;
  job.options.frame = a.frame == "normal" ? PatchFrame::NormalAligned : PatchFrame::ApexCentered;
  job.unit_scale = a.unit_scale;
  job.snap_landmarks = a.snap;
  job.jobs = a.common.jobs;
  if (!a.patches_dir.empty()) {
    fs::create_directories(a.patches_dir);
    job.patch_dir = a.patches_dir;
  }
  try {
    job.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::optional<SpectralBasis> basis;
  if (job.method == FeatureMethod::Glf) {
    if (a.basis.empty()) throw UsageError("--basis is required for GLF features");
    basis = load_basis(a.basis, job.patch);
    if (basis->size() < job.k)
      throw UsageError("basis holds " + std::to_string(basis->size()) + " vectors; k = " + std::to_string(job.k));
  }
  const DatasetManifest manifest = a.manifest.empty() ? scan_bu3dfe(a.bu3dfe) : load_manifest(a.manifest);

  const auto t0 = std::chrono::steady_clock::now();
  const FeatureRun run = extract_features(manifest, job, basis ? &*basis : nullptr);
  const fs::path out = a.common.out;
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_feature_table(run.table, out, a.csv);

  const bool partial = !run.errors.empty();
  Json status = {{"status", partial ? (run.table.samples.empty() ? "failed" : "partial") : "ok"},
                 {"scans", manifest.records.size()},
                 {"extracted", run.table.samples.size()},
                 {"missing_patches", run.missing_patches},
                 {"columns", run.table.values.cols()},
                 {"seconds", seconds_since(t0)},
                 {"config",
                  {{"method", a.method}, {"mode", a.mode}, {"k", a.k}, {"mass", a.mass}, {"frame", a.frame},
                   {"patch", a.patch.to_json()}, {"unit_scale", a.unit_scale}, {"snap", a.snap},
                   {"source", a.manifest.empty() ? a.bu3dfe : a.manifest}, {"basis", a.basis}}},
                 {"errors", errors_json(run.errors)}};
  write_json(fs::path(out.string() + ".run.json"), status);
  std::cout << "features: " << run.table.samples.size() << "/" << manifest.records.size() << " scans, "
            << run.table.values.cols() << " columns, " << run.missing_patches << " missing patches ("
            << seconds_since(t0) << " s)\n";
  for (const auto& e : run.errors) std::cerr << "error: " << e.item << ": " << e.message << '\n';
  return partial ? kExitPartial : 0;
}

// ------------------------------------------------------------ evaluate

struct EvalArgs {
  Common common;
  std::string features, compare, task = "expressions", classifier = "svm", kernel = "rbf";
  double C = 1.0, gamma = 0.0;
  std::size_t folds = 10;
  std::vector<std::size_t> sweep;
  bool shuffle = false, no_standardize = false;
  CLI::Option *task_opt = nullptr, *clf_opt = nullptr, *kernel_opt = nullptr, *c_opt = nullptr,
              *gamma_opt = nullptr, *folds_opt = nullptr, *sweep_opt = nullptr;
};

void setup_evaluate(CLI::App& app, EvalArgs& a) {
  auto* cmd = app.add_subcommand("evaluate", "Cross-validated expression or Action Unit experiments");
  add_common(cmd, a.common, false, "Report JSON path (default: print only)");
  cmd->add_option("--features", a.features, "Feature table from 'features'")->required();
  cmd->add_option("--compare", a.compare, "Second feature table evaluated on the same folds");
  a.task_opt = cmd->add_option("--task", a.task, "expressions or aus")->check(CLI::IsMember({"expressions", "aus"}));
  a.clf_opt = cmd->add_option("--classifier", a.classifier, "flda or svm")->check(CLI::IsMember({"flda", "svm"}));
  a.kernel_opt = cmd->add_option("--kernel", a.kernel, "SVM kernel: rbf or linear")
                     ->check(CLI::IsMember({"rbf", "linear"}));
  a.c_opt = cmd->add_option("--C", a.C, "SVM regularization")->check(CLI::PositiveNumber);
  a.gamma_opt = cmd->add_option("--gamma", a.gamma, "RBF width (default 1/d)")->check(CLI::NonNegativeNumber);
  a.folds_opt = cmd->add_option("--folds", a.folds, "Identity-disjoint folds");
  a.sweep_opt = cmd->add_option("--sweep", a.sweep, "k values, e.g. 10,30,50,100,200")->delimiter(',');
  cmd->add_flag("--shuffle-labels", a.shuffle, "Add a chance-level control with permuted labels");
  cmd->add_flag("--no-standardize", a.no_standardize, "Do not z-score features per fold");
}

int run_evaluate(EvalArgs& a) {
  const Json cfg = load_config(a.common.config);
  merge(a.task, cfg, "task", a.task_opt);
  merge(a.classifier, cfg, "classifier", a.clf_opt);
  merge(a.kernel, cfg, "kernel", a.kernel_opt);
  merge(a.C, cfg, "C", a.c_opt);
  merge(a.gamma, cfg, "gamma", a.gamma_opt);
  merge(a.folds, cfg, "folds", a.folds_opt);
  merge(a.sweep, cfg, "sweep", a.sweep_opt);
  merge(a.common.seed, cfg, "seed", a.common.seed_opt);
  merge(a.common.jobs, cfg, "jobs", a.common.jobs_opt);
  if (a.folds < 2) throw UsageError("--folds must be at least 2");
  if (!a.sweep.empty() && !a.compare.empty()) throw UsageError("--sweep and --compare cannot be combined");
  if (!a.sweep.empty() && a.task != "expressions") throw UsageError("--sweep applies to the expressions task");
  if (!a.compare.empty() && a.task != "expressions") throw UsageError("--compare applies to the expressions task");
  for (std::size_t k : a.sweep)
    if (k == 0) throw UsageError("sweep values must be positive");

  const FeatureTable table = load_feature_table(a.features);
  std::optional<FeatureTable> other;
  if (!a.compare.empty()) other = load_feature_table(a.compare);

  EvaluateJob job;
  job.task = parse_task(a.task);
  job.classifier.kind = parse_classifier(a.classifier);
  job.classifier.svm.kernel.type = parse_kernel(a.kernel);
  job.classifier.svm.kernel.gamma = a.gamma;
  job.classifier.svm.C = a.C;
  job.classifier.standardize = !a.no_standardize;
  job.classifier.jobs = a.common.jobs;
  job.folds = a.folds;
  job.seed = a.common.seed;
  job.sweep = a.sweep;
  job.shuffle_labels = a.shuffle;
  for (std::size_t k : a.sweep)
    if (k > table.k)
      throw UsageError("sweep value " + std::to_string(k) + " exceeds the table's k = " + std::to_string(table.k));

  Json config = {{"method", to_string(table.method)},
                 {"mode", to_string(table.mode)},
                 {"k", table.k},
                 {"classifier", a.classifier},
                 {"kernel", a.kernel},
                 {"C", a.C},
                 {"gamma", a.gamma},
                 {"folds", a.folds},
                 {"seed", a.common.seed},
                 {"standardize", !a.no_standardize},
                 {"shuffle_labels", a.shuffle},
                 {"task", a.task},
                 {"features", a.features},
                 {"patch",
                  {{"lambda_min", table.patch.lambda_min}, {"lambda_max", table.patch.lambda_max},
                   {"curves", table.patch.curves}, {"samples", table.patch.samples}}}};
  if (!a.compare.empty()) config["compare_with"] = a.compare;
  if (!a.sweep.empty()) config["sweep"] = a.sweep;

  const auto t0 = std::chrono::steady_clock::now();
  ExperimentOutcome res = run_experiment(table, other ? &*other : nullptr, job, config);
  const auto problems = validate_report(res.report);
  for (const auto& p : problems) std::cerr << "report schema: " << p << '\n';
  std::cout << res.text;
  std::cout << "(" << seconds_since(t0) << " s)\n";
  if (!a.common.out.empty()) write_json(a.common.out, res.report);
  for (const auto& e : res.report["errors"]) std::cerr << "error: " << e["message"].get<std::string>() << '\n';
  if (!res.ok) return kExitFailure;
  return problems.empty() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph Laplacian and Shape-DNA features for 3D facial expression recognition"};
  app.require_subcommand(1);
  SynthArgs synth;
  BasisArgs basis;
  FeatureArgs features;
  EvalArgs evaluate;
  setup_synth(app, synth);
  setup_basis(app, basis);
  setup_features(app, features);
  setup_evaluate(app, evaluate);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }
  try {
    if (app.got_subcommand("synth")) return run_synth(synth);
    if (app.got_subcommand("basis")) return run_basis(basis);
    if (app.got_subcommand("features")) return run_features(features);
    return run_evaluate(evaluate);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
