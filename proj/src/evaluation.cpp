#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "facelap/classify.hpp"
#include "facelap/parallel.hpp"

namespace facelap {

std::string to_string(ClassifierKind k) { return k == ClassifierKind::Flda ? "flda" : "svm"; }

ClassifierKind parse_classifier(const std::string& s) {
  if (s == "flda") return ClassifierKind::Flda;
  if (s == "svm") return ClassifierKind::Svm;
  throw std::invalid_argument("unknown classifier '" + s + "' (expected flda or svm)");
}

namespace {

// Unbiased draw from [0, bound) by rejection; std::uniform_int_distribution is
// implementation-defined and would make folds differ between standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % bound;
  }
}

}  // namespace

void seeded_shuffle(std::span<std::size_t> items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

std::vector<Fold> identity_disjoint_folds(std::span<const std::string> sample_subjects, std::size_t folds,
                                          std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("identity_disjoint_folds: need at least 2 folds");
  std::vector<std::string> subjects(sample_subjects.begin(), sample_subjects.end());
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  if (folds > subjects.size()) {
    throw std::invalid_argument("identity_disjoint_folds: " + std::to_string(folds) + " folds requested but only " +
                                std::to_string(subjects.size()) + " subjects");
  }
  std::vector<std::size_t> order(subjects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  seeded_shuffle(order, seed);
  std::map<std::string, std::size_t> fold_of;
  std::vector<Fold> out(folds);
  for (std::size_t i = 0; i < order.size(); ++i) {
    fold_of[subjects[order[i]]] = i % folds;
    out[i % folds].test_subjects.push_back(subjects[order[i]]);
  }
  for (auto& f : out) std::sort(f.test_subjects.begin(), f.test_subjects.end());
  for (std::size_t s = 0; s < sample_subjects.size(); ++s) {
    const std::size_t f = fold_of[sample_subjects[s]];
    for (std::size_t g = 0; g < folds; ++g) (g == f ? out[g].test : out[g].train).push_back(s);
  }
  return out;
}

double accuracy_percent(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("accuracy: length mismatch");
  if (truth.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == predicted[i];
  return 100.0 * static_cast<double>(ok) / static_cast<double>(truth.size());
}

namespace {

struct FoldData {
  Matrix train;
  Matrix test;
};

FoldData prepare(const Matrix& x, const Fold& fold, bool standardize) {
  FoldData d{select_rows(x, fold.train), select_rows(x, fold.test)};
  if (standardize) {
    const Standardizer s = Standardizer::fit(d.train);
    for (std::size_t r = 0; r < d.train.rows(); ++r) s.apply(d.train.row(r));
    for (std::size_t r = 0; r < d.test.rows(); ++r) s.apply(d.test.row(r));
  }
  return d;
}

std::vector<int> pick(std::span<const int> v, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::vector<int> train_and_predict(const FoldData& d, std::span<const int> labels, const ClassifierConfig& cfg) {
  std::vector<int> pred;
  pred.reserve(d.test.rows());
  if (cfg.kind == ClassifierKind::Flda) {
    const FldaModel m = flda_train(d.train, labels, cfg.flda_regularization);
    for (std::size_t r = 0; r < d.test.rows(); ++r) pred.push_back(flda_predict(m, d.test.row(r)));
  } else {
    const SvmModel m = svm_train(d.train, labels, cfg.svm);
    for (std::size_t r = 0; r < d.test.rows(); ++r) pred.push_back(svm_predict(m, d.test.row(r)));
  }
  return pred;
}

void check_folds(const Matrix& x, std::size_t labels, const std::vector<Fold>& folds) {
  if (labels != x.rows()) throw std::invalid_argument("evaluate: label count does not match sample count");
  if (folds.empty()) throw std::invalid_argument("evaluate: no folds");
  for (const auto& f : folds)
    for (const auto* part : {&f.train, &f.test})
      for (std::size_t i : *part)
        if (i >= x.rows()) throw std::invalid_argument("evaluate: fold index out of range");
}

}  // namespace

ExpressionResult evaluate_expressions(const Matrix& x, std::span<const int> expressions,
                                      const std::vector<Fold>& folds, const ClassifierConfig& cfg) {
  check_folds(x, expressions.size(), folds);
  const std::size_t classes = kExpressionCodes.size();
  for (int e : expressions)
    if (e < 0 || e >= static_cast<int>(classes)) throw std::invalid_argument("evaluate: expression label out of range");

  std::vector<std::vector<int>> predictions(folds.size());
  parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) {
    try {
      const FoldData d = prepare(x, folds[f], cfg.standardize);
      predictions[f] = train_and_predict(d, pick(expressions, folds[f].train), cfg);
    } catch (const std::exception& e) {
      throw EvaluationError(f, e.what());
    }
  });

  ExpressionResult out;
  out.confusion.labels.assign(kExpressionCodes.begin(), kExpressionCodes.end());
  out.confusion.counts.assign(classes, std::vector<std::size_t>(classes, 0));
  out.confusion.percent.assign(classes, std::vector<double>(classes, 0.0));
  std::vector<std::size_t> rows_seen(classes, 0);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::vector<int> truth = pick(expressions, folds[f].test);
    out.fold_accuracy.push_back(accuracy_percent(truth, predictions[f]));
    std::vector<std::vector<std::size_t>> counts(classes, std::vector<std::size_t>(classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i)
      ++counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predictions[f][i])];
    for (std::size_t r = 0; r < classes; ++r) {
      std::size_t total = 0;
      for (std::size_t c = 0; c < classes; ++c) {
        total += counts[r][c];
        out.confusion.counts[r][c] += counts[r][c];
      }
      if (total == 0) continue;  // class absent from this test fold
      ++rows_seen[r];
      for (std::size_t c = 0; c < classes; ++c)
        out.confusion.percent[r][c] += 100.0 * static_cast<double>(counts[r][c]) / static_cast<double>(total);
    }
  }
  for (std::size_t r = 0; r < classes; ++r)
    if (rows_seen[r] > 0)
      for (double& v : out.confusion.percent[r]) v /= static_cast<double>(rows_seen[r]);

  double sum = 0.0;
  for (double a : out.fold_accuracy) sum += a;
  out.mean_accuracy = sum / static_cast<double>(folds.size());
  double ss = 0.0;
  for (double a : out.fold_accuracy) ss += (a - out.mean_accuracy) * (a - out.mean_accuracy);
  out.std_accuracy = folds.size() > 1 ? std::sqrt(ss / static_cast<double>(folds.size() - 1)) : 0.0;
  return out;
}

AuResult evaluate_aus(const Matrix& x, std::span<const AuMask> aus, const std::vector<Fold>& folds,
                      const ClassifierConfig& cfg) {
  check_folds(x, aus.size(), folds);
  const std::size_t units = kActionUnits.size();
  // pred[f][u][t]: 1/0 prediction, or -1 when AU u was skipped in fold f.
  std::vector<std::vector<std::vector<int>>> pred(folds.size());

  parallel_for(folds.size(), cfg.jobs, [&](std::size_t f) {
    try {
      const Fold& fold = folds[f];
      const FoldData d = prepare(x, fold, cfg.standardize);
      pred[f].assign(units, {});
      Matrix k_train, k_test;
      if (cfg.kind == ClassifierKind::Svm) {
        // One kernel matrix per fold serves all AU machines.
        KernelSpec spec = cfg.svm.kernel;
        spec.gamma = spec.resolved_gamma(x.cols());
        k_train = kernel_matrix(d.train, spec);
        k_test = Matrix(d.test.rows(), d.train.rows());
        for (std::size_t t = 0; t < d.test.rows(); ++t) {
          const std::vector<double> row = kernel_row(d.train, d.test.row(t), spec);
          std::copy(row.begin(), row.end(), k_test.row(t).begin());
        }
      }
      for (std::size_t u = 0; u < units; ++u) {
        std::vector<int> y;
        std::size_t positives = 0;
        for (std::size_t i : fold.train) {
          const bool on = aus[i] >> u & 1u;
          positives += on;
          y.push_back(on ? 1 : -1);
        }
        auto& p = pred[f][u];
        if (positives == 0) {
          p.assign(fold.test.size(), -1);
          continue;
        }
        if (positives == y.size()) {
          p.assign(fold.test.size(), 1);
          continue;
        }
        p.reserve(fold.test.size());
        if (cfg.kind == ClassifierKind::Flda) {
          const FldaModel m = flda_train(d.train, y, cfg.flda_regularization);
          for (std::size_t t = 0; t < d.test.rows(); ++t) p.push_back(flda_predict(m, d.test.row(t)) == 1);
        } else {
          const DualSolution sol = solve_svm_dual(k_train, y, cfg.svm);
          for (std::size_t t = 0; t < d.test.rows(); ++t) {
            double v = -sol.rho;
            auto kr = k_test.row(t);
            for (std::size_t i = 0; i < y.size(); ++i)
              if (sol.alpha[i] > 0.0) v += sol.alpha[i] * y[i] * kr[i];
            p.push_back(v > 0.0);
          }
        }
      }
    } catch (const std::exception& e) {
      throw EvaluationError(f, e.what());
    }
  });

  AuResult out;
  double weighted = 0.0;
  std::size_t weight = 0;
  for (std::size_t u = 0; u < units; ++u) {
    AuScore s;
    s.au = kActionUnits[u];
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const auto& p = pred[f][u];
      if (!p.empty() && p.front() == -1) {
        s.skipped_folds.push_back(f);
        continue;
      }
      for (std::size_t t = 0; t < folds[f].test.size(); ++t) {
        const bool truth = aus[folds[f].test[t]] >> u & 1u;
        const bool guess = p[t] == 1;
        if (truth && guess) ++s.tp;
        else if (!truth && guess) ++s.fp;
        else if (truth) ++s.fn;
        else ++s.tn;
      }
    }
    s.positives = s.tp + s.fn;
    if (s.tp + s.fp > 0) s.precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
    if (s.tp + s.fn > 0) s.recall = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn);
    const std::size_t denom = 2 * s.tp + s.fp + s.fn;
    s.defined = denom > 0;
    if (s.defined) s.f1 = 2.0 * static_cast<double>(s.tp) / static_cast<double>(denom);
    if (s.positives > 0) {
      weighted += static_cast<double>(s.positives) * s.f1;
      weight += s.positives;
    }
    out.scores.push_back(std::move(s));
  }
  out.weighted_f1 = weight > 0 ? weighted / static_cast<double>(weight) : 0.0;
  return out;
}

}  // namespace facelap
