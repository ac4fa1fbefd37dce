#pragma once

// Linear discriminant and SVM classifiers plus the identity-disjoint
// cross-validation protocol used for expression and Action Unit experiments.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "facelap/labels.hpp"
#include "facelap/linalg.hpp"

namespace facelap {

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ------------------------------------------------------------ scaling

// Per-dimension z-score fitted on training rows. Constant dimensions keep
// unit scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  void apply(std::span<double> row) const;
  Matrix transform(const Matrix& x) const;
};

Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows);

// ------------------------------------------------------------ FLDA

struct FldaModel {
  std::vector<int> classes;      // sorted labels
  std::vector<double> center;    // training mean, subtracted before projecting
  Matrix projection;             // d x (C-1)
  Matrix class_means;            // C x (C-1), in discriminant space
  std::vector<double> priors;    // per class
  std::vector<double> eigenvalues;  // generalized eigenvalues, descending
  double regularization = 0.0;   // epsilon added to the within-class scatter
};

// Discriminant directions: top C-1 generalized eigenvectors of
// (S_b, S_w + eps I), eps = reg_factor * trace(S_w) / d. The problem is solved
// exactly inside the span of the centred training data, so d may far exceed n.
FldaModel flda_train(const Matrix& x, std::span<const int> labels, double reg_factor = 1e-3);

std::vector<double> flda_project(const FldaModel& model, std::span<const double> x);

// Nearest projected class mean; ties go to the lower class.
int flda_predict(const FldaModel& model, std::span<const double> x);

// ------------------------------------------------------------ SVM

enum class KernelType { Linear, Rbf };

struct KernelSpec {
  KernelType type = KernelType::Rbf;
  double gamma = 0.0;  // <= 0 means 1 / d

  double resolved_gamma(std::size_t dim) const {
    return gamma > 0.0 ? gamma : 1.0 / static_cast<double>(dim);
  }
};

std::string to_string(KernelType t);
KernelType parse_kernel(const std::string& s);

struct SvmParams {
  KernelSpec kernel;
  double C = 1.0;
  double tolerance = 1e-3;               // max KKT violation at convergence
  std::size_t max_iterations = 100000;
  bool record_objective = false;
};

double kernel_value(const KernelSpec& k, double gamma, std::span<const double> a, std::span<const double> b);
Matrix kernel_matrix(const Matrix& x, const KernelSpec& k);
std::vector<double> kernel_row(const Matrix& x, std::span<const double> sample, const KernelSpec& k);

struct DualSolution {
  std::vector<double> alpha;
  double rho = 0.0;                 // decision = sum alpha_i y_i K(x_i, x) - rho
  double dual_objective = 0.0;      // sum alpha - 1/2 alpha^T Q alpha
  double max_violation = 0.0;
  std::size_t iterations = 0;
  std::vector<double> objective_trace;  // per iteration when recorded
};

// SMO with the maximal-violating-pair working set on a precomputed kernel.
// labels are +1 / -1. Throws ConvergenceError on hitting max_iterations.
DualSolution solve_svm_dual(const Matrix& kernel, std::span<const int> labels, const SvmParams& params);

struct BinaryMachine {
  KernelSpec kernel;  // gamma resolved
  Matrix support;     // support vectors
  std::vector<double> coef;  // alpha_i y_i
  double rho = 0.0;
  DualSolution dual;
};

BinaryMachine svm_train_binary(const Matrix& x, std::span<const int> labels, const SvmParams& params);
double svm_decision(const BinaryMachine& m, std::span<const double> x);

// One-vs-one multiclass model sharing one copy of the training samples.
struct SvmModel {
  struct Pair {
    std::size_t first = 0;   // class slot voted for when decision > 0
    std::size_t second = 0;
    std::vector<std::size_t> index;  // training rows of the pair
    std::vector<double> coef;        // alpha_i y_i per row in `index`
    double rho = 0.0;
  };
  KernelSpec kernel;  // gamma resolved
  std::vector<int> classes;
  Matrix samples;
  std::vector<Pair> pairs;
};

SvmModel svm_train(const Matrix& x, std::span<const int> labels, const SvmParams& params);
int svm_predict(const SvmModel& model, std::span<const double> x);

// One-vs-one voting. decisions[p] belongs to the p-th pair in (a < b)
// lexicographic order. Ties: more votes, then larger summed decision values,
// then lower class slot.
std::size_t resolve_ovo_votes(std::size_t classes, std::span<const double> decisions);

// ------------------------------------------------------------ protocol

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::vector<std::string> test_subjects;
};

// Partitions subjects (not samples) into `folds` groups; deterministic in
// (subject list, seed).
std::vector<Fold> identity_disjoint_folds(std::span<const std::string> sample_subjects, std::size_t folds,
                                          std::uint64_t seed);

// Deterministic Fisher-Yates shuffle driven by mt19937_64.
void seeded_shuffle(std::span<std::size_t> items, std::uint64_t seed);

enum class ClassifierKind { Flda, Svm };
std::string to_string(ClassifierKind k);
ClassifierKind parse_classifier(const std::string& s);

struct ClassifierConfig {
  ClassifierKind kind = ClassifierKind::Svm;
  SvmParams svm;
  double flda_regularization = 1e-3;
  bool standardize = true;
  std::size_t jobs = 1;  // folds trained concurrently
};

class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(std::size_t fold, const std::string& what)
      : std::runtime_error("fold " + std::to_string(fold) + ": " + what), fold_(fold) {}
  std::size_t fold() const { return fold_; }

 private:
  std::size_t fold_;
};

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;   // pooled over folds
  std::vector<std::vector<double>> percent;       // fold row-percentages averaged
};

struct ExpressionResult {
  std::vector<double> fold_accuracy;  // percent
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  ConfusionMatrix confusion;
};

ExpressionResult evaluate_expressions(const Matrix& x, std::span<const int> expressions,
                                      const std::vector<Fold>& folds, const ClassifierConfig& cfg);

struct AuScore {
  int au = 0;
  std::size_t positives = 0;  // ground-truth positives among evaluated test samples
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool defined = false;  // false when no positives were seen or predicted
  std::vector<std::size_t> skipped_folds;  // no positive training sample
};

struct AuResult {
  std::vector<AuScore> scores;  // in kActionUnits order
  double weighted_f1 = 0.0;     // weighted by positives
};

AuResult evaluate_aus(const Matrix& x, std::span<const AuMask> aus, const std::vector<Fold>& folds,
                      const ClassifierConfig& cfg);

struct SweepResult {
  std::vector<std::size_t> ks;
  std::vector<ExpressionResult> results;  // one per k
};

// Evaluates each feature matrix produced by `slice(k)` on the same folds.
template <typename SliceFn>
SweepResult eigen_sweep(std::span<const std::size_t> ks, SliceFn&& slice, std::span<const int> expressions,
                        const std::vector<Fold>& folds, const ClassifierConfig& cfg) {
  SweepResult out;
  for (std::size_t k : ks) {
    out.ks.push_back(k);
    out.results.push_back(evaluate_expressions(slice(k), expressions, folds, cfg));
  }
  return out;
}

double accuracy_percent(std::span<const int> truth, std::span<const int> predicted);

}  // namespace facelap
