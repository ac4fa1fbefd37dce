#include <algorithm>
#include <cmath>
#include <limits>

#include "facelap/classify.hpp"
#include "facelap/kernels.hpp"

namespace facelap {

std::string to_string(KernelType t) { return t == KernelType::Linear ? "linear" : "rbf"; }

KernelType parse_kernel(const std::string& s) {
  if (s == "linear") return KernelType::Linear;
  if (s == "rbf") return KernelType::Rbf;
  throw std::invalid_argument("unknown kernel '" + s + "' (expected linear or rbf)");
}

double kernel_value(const KernelSpec& k, double gamma, std::span<const double> a, std::span<const double> b) {
  if (k.type == KernelType::Linear) return simd::dot(a, b);
  return std::exp(-gamma * simd::squared_distance(a, b));
}

Matrix kernel_matrix(const Matrix& x, const KernelSpec& k) {
  const std::size_t n = x.rows();
  const double gamma = k.resolved_gamma(x.cols());
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = kernel_value(k, gamma, x.row(i), x.row(j));
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

std::vector<double> kernel_row(const Matrix& x, std::span<const double> sample, const KernelSpec& k) {
  const double gamma = k.resolved_gamma(x.cols());
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = kernel_value(k, gamma, x.row(i), sample);
  return out;
}

namespace {

constexpr double kTau = 1e-12;

double objective(std::span<const double> alpha, std::span<const double> grad) {
  // With G = Q a - e:  sum a - a^T Q a / 2 = -sum a_i (G_i - 1) / 2.
  double f = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) f += alpha[i] * (grad[i] - 1.0);
  return -0.5 * f;
}

}  // namespace

DualSolution solve_svm_dual(const Matrix& kernel, std::span<const int> labels, const SvmParams& params) {
  const std::size_t n = labels.size();
  if (kernel.rows() != n || kernel.cols() != n) throw std::invalid_argument("svm: kernel size mismatch");
  if (!(params.C > 0.0)) throw std::invalid_argument("svm: C must be positive");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1) pos = true;
    else if (y == -1) neg = true;
    else throw std::invalid_argument("svm: labels must be +1 or -1");
  }
  if (!pos || !neg) throw std::invalid_argument("svm: both labels must be present");

  const double c = params.C;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = labels[i];
  DualSolution sol;
  sol.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  std::vector<double>& a = sol.alpha;

  auto in_up = [&](std::size_t t) { return (y[t] > 0 && a[t] < c) || (y[t] < 0 && a[t] > 0.0); };
  auto in_low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0.0) || (y[t] < 0 && a[t] < c); };

  std::vector<double> qi(n), qj(n);
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    sol.max_violation = (i == n || j == n) ? 0.0 : std::max(0.0, gmax - gmin);
    if (i == n || j == n || gmax - gmin < params.tolerance) break;
    if (sol.iterations >= params.max_iterations) {
      throw ConvergenceError("svm: no convergence after " + std::to_string(sol.iterations) +
                             " iterations, max KKT violation " + std::to_string(gmax - gmin));
    }
    ++sol.iterations;

    for (std::size_t t = 0; t < n; ++t) {
      qi[t] = y[i] * y[t] * kernel(i, t);
      qj[t] = y[j] * y[t] * kernel(j, t);
    }
    const double ai = a[i], aj = a[j];
    if (y[i] != y[j]) {
      double quad = qi[i] + qj[j] + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = qi[i] + qj[j] - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
    const double di = a[i] - ai, dj = a[j] - aj;
    simd::active().axpy2(grad.data(), di, qi.data(), dj, qj.data(), n);
    if (params.record_objective) sol.objective_trace.push_back(objective(a, grad));
  }

  // Bias as in LIBSVM: average over free vectors, else midpoint of the bounds.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  sol.rho = free > 0 ? sum_free / static_cast<double>(free) : 0.5 * (ub + lb);
  sol.dual_objective = objective(a, grad);
  return sol;
}

BinaryMachine svm_train_binary(const Matrix& x, std::span<const int> labels, const SvmParams& params) {
  if (labels.size() != x.rows()) throw std::invalid_argument("svm: label count does not match sample count");
  BinaryMachine m;
  m.kernel = params.kernel;
  m.kernel.gamma = params.kernel.resolved_gamma(x.cols());
  m.dual = solve_svm_dual(kernel_matrix(x, m.kernel), labels, params);
  m.rho = m.dual.rho;
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (m.dual.alpha[i] > 0.0) sv.push_back(i);
  m.support = select_rows(x, sv);
  for (std::size_t i : sv) m.coef.push_back(m.dual.alpha[i] * labels[i]);
  return m;
}

double svm_decision(const BinaryMachine& m, std::span<const double> x) {
  if (!m.support.empty() && x.size() != m.support.cols())
    throw std::invalid_argument("svm: feature dimension mismatch");
  double f = -m.rho;
  for (std::size_t i = 0; i < m.support.rows(); ++i)
    f += m.coef[i] * kernel_value(m.kernel, m.kernel.gamma, m.support.row(i), x);
  return f;
}

SvmModel svm_train(const Matrix& x, std::span<const int> labels, const SvmParams& params) {
  if (labels.size() != x.rows()) throw std::invalid_argument("svm: label count does not match sample count");
  SvmModel model;
  model.kernel = params.kernel;
  model.kernel.gamma = params.kernel.resolved_gamma(x.cols());
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()), model.classes.end());
  if (model.classes.size() < 2) throw std::invalid_argument("svm: need at least 2 classes");
  model.samples = x;
  const Matrix full = kernel_matrix(x, model.kernel);

  std::vector<std::size_t> slot(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    slot[i] = static_cast<std::size_t>(
        std::lower_bound(model.classes.begin(), model.classes.end(), labels[i]) - model.classes.begin());

  for (std::size_t p = 0; p < model.classes.size(); ++p) {
    for (std::size_t q = p + 1; q < model.classes.size(); ++q) {
      SvmModel::Pair pair;
      pair.first = p;
      pair.second = q;
      std::vector<int> y;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (slot[i] == p || slot[i] == q) {
          pair.index.push_back(i);
          y.push_back(slot[i] == p ? 1 : -1);
        }
      }
      const std::size_t m = pair.index.size();
      Matrix k(m, m);
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) k(a, b) = full(pair.index[a], pair.index[b]);
      const DualSolution sol = solve_svm_dual(k, y, params);
      pair.rho = sol.rho;
      std::vector<std::size_t> kept;
      for (std::size_t a = 0; a < m; ++a) {
        if (sol.alpha[a] > 0.0) {
          kept.push_back(pair.index[a]);
          pair.coef.push_back(sol.alpha[a] * y[a]);
        }
      }
      pair.index = std::move(kept);
      model.pairs.push_back(std::move(pair));
    }
  }
  return model;
}

std::size_t resolve_ovo_votes(std::size_t classes, std::span<const double> decisions) {
  if (decisions.size() != classes * (classes - 1) / 2) throw std::invalid_argument("ovo: decision count mismatch");
  std::vector<std::size_t> votes(classes, 0);
  std::vector<double> score(classes, 0.0);
  std::size_t p = 0;
  for (std::size_t a = 0; a < classes; ++a)
    for (std::size_t b = a + 1; b < classes; ++b, ++p) {
      const double d = decisions[p];
      ++votes[d > 0.0 ? a : b];
      score[a] += d;
      score[b] -= d;
    }
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && score[c] > score[best])) best = c;
  }
  return best;
}

int svm_predict(const SvmModel& model, std::span<const double> x) {
  if (x.size() != model.samples.cols()) throw std::invalid_argument("svm: feature dimension mismatch");
  // Kernel values are computed lazily and shared across pairs.
  std::vector<double> kv(model.samples.rows(), std::numeric_limits<double>::quiet_NaN());
  std::vector<double> decisions;
  decisions.reserve(model.pairs.size());
  for (const auto& pair : model.pairs) {
    double f = -pair.rho;
    for (std::size_t s = 0; s < pair.index.size(); ++s) {
      const std::size_t i = pair.index[s];
      if (std::isnan(kv[i])) kv[i] = kernel_value(model.kernel, model.kernel.gamma, model.samples.row(i), x);
      f += pair.coef[s] * kv[i];
    }
    decisions.push_back(f);
  }
  return model.classes[resolve_ovo_votes(model.classes.size(), decisions)];
}

}  // namespace facelap
