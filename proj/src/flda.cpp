#include <algorithm>
#include <cmath>
#include <map>

#include "facelap/classify.hpp"
#include "facelap/kernels.hpp"

namespace facelap {

Standardizer Standardizer::fit(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  Standardizer s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t r = 0; r < n; ++r) simd::axpy(1.0, x.row(r), s.mean);
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      const double t = row[c] - s.mean[c];
      var[c] += t * t;
    }
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / static_cast<double>(n));
    // Relative floor keeps zero-filled or constant columns from blowing up.
    if (sd > 1e-12 * std::max(1.0, std::abs(s.mean[c]))) s.scale[c] = 1.0 / sd;
  }
  return s;
}

void Standardizer::apply(std::span<double> row) const {
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) * scale[c];
}

Matrix Standardizer::transform(const Matrix& x) const {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) apply(out.row(r));
  return out;
}

Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

FldaModel flda_train(const Matrix& x, std::span<const int> labels, double reg_factor) {
  const std::size_t n = x.rows(), d = x.cols();
  if (labels.size() != n) throw std::invalid_argument("flda_train: label count does not match sample count");
  std::map<int, std::size_t> count;
  for (int l : labels) ++count[l];
  if (count.size() < 2) throw std::invalid_argument("flda_train: need at least 2 classes");
  for (const auto& [l, c] : count)
    if (c < 2) throw std::invalid_argument("flda_train: class " + std::to_string(l) + " has fewer than 2 samples");

  FldaModel model;
  std::vector<std::size_t> slot(n);
  for (const auto& [l, c] : count) {
    model.classes.push_back(l);
    model.priors.push_back(static_cast<double>(c) / static_cast<double>(n));
  }
  for (std::size_t i = 0; i < n; ++i)
    slot[i] = static_cast<std::size_t>(
        std::lower_bound(model.classes.begin(), model.classes.end(), labels[i]) - model.classes.begin());
  const std::size_t classes = model.classes.size();

  model.center.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) simd::axpy(1.0, x.row(r), model.center);
  for (double& m : model.center) m /= static_cast<double>(n);
  Matrix xc = x;
  for (std::size_t r = 0; r < n; ++r) simd::axpy(-1.0, model.center, xc.row(r));

  // Every scatter direction lies in the row span of xc. With G = xc xc^T =
  // U diag(g) U^T, Q = xc^T U diag(g)^-1/2 is an orthonormal basis of that span
  // and the sample coordinates in it are Z = U diag(g)^1/2.
  Matrix gram(n, n);
  const auto& kern = simd::active();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double v = kern.dot(xc.row(i).data(), xc.row(j).data(), d);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  const EigenDecomposition ge = symmetric_eigen(gram, n);
  const double gmax = std::max(0.0, ge.values.back());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i)
    if (ge.values[i] > 1e-10 * gmax) keep.push_back(i);
  const std::size_t r = keep.size();
  if (r == 0) throw NumericalError("flda_train: training data has zero variance");

  Matrix z(n, r);
  for (std::size_t j = 0; j < r; ++j) {
    const double s = std::sqrt(ge.values[keep[j]]);
    for (std::size_t i = 0; i < n; ++i) z(i, j) = ge.vectors(i, keep[j]) * s;
  }

  Matrix means(classes, r);
  for (std::size_t i = 0; i < n; ++i) simd::axpy(1.0, z.row(i), means.row(slot[i]));
  for (std::size_t c = 0; c < classes; ++c)
    for (double& v : means.row(c)) v /= static_cast<double>(count[model.classes[c]]);

  Matrix sw(r, r), sb(r, r);
  std::vector<double> dev(r);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < r; ++j) dev[j] = z(i, j) - means(slot[i], j);
    for (std::size_t a = 0; a < r; ++a) simd::axpy(dev[a], dev, sw.row(a));
  }
  for (std::size_t c = 0; c < classes; ++c) {
    const double w = static_cast<double>(count[model.classes[c]]);
    auto m = means.row(c);
    for (std::size_t a = 0; a < r; ++a) simd::axpy(w * m[a], m, sb.row(a));
  }
  double trace = 0.0;
  for (std::size_t a = 0; a < r; ++a) trace += sw(a, a);
  model.regularization = reg_factor * trace / static_cast<double>(d);
  for (std::size_t a = 0; a < r; ++a) sw(a, a) += model.regularization;

  // S_b a = mu (S_w + eps I) a  ->  (L^-1 S_b L^-T) y = mu y,  a = L^-T y.
  const Matrix l = cholesky(sw);
  Matrix m = sb;
  for (std::size_t c = 0; c < r; ++c) {
    std::vector<double> col = m.column(c);
    solve_lower(l, col);
    for (std::size_t a = 0; a < r; ++a) m(a, c) = col[a];
  }
  m = m.transposed();
  for (std::size_t c = 0; c < r; ++c) {
    std::vector<double> col = m.column(c);
    solve_lower(l, col);
    for (std::size_t a = 0; a < r; ++a) m(a, c) = col[a];
  }
  // Only the upper triangle is read, so rounding asymmetry is harmless.
  const EigenDecomposition me = symmetric_eigen(m, r);
  const std::size_t q = std::min(classes - 1, r);

  // Directions in the original space: xc^T (U diag(g)^-1/2 a) for each kept a.
  Matrix b(n, q);
  for (std::size_t k = 0; k < q; ++k) {
    const std::size_t src = r - 1 - k;  // descending
    model.eigenvalues.push_back(std::max(0.0, me.values[src]));
    std::vector<double> a = me.vectors.column(src);
    solve_lower_transposed(l, a);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < r; ++j) s += ge.vectors(i, keep[j]) * a[j] / std::sqrt(ge.values[keep[j]]);
      b(i, k) = s;
    }
  }
  model.projection = Matrix(d, q);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = xc.row(i);
    for (std::size_t k = 0; k < q; ++k) {
      const double w = b(i, k);
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < d; ++c) model.projection(c, k) += w * xi[c];
    }
  }
  // Sign convention: largest-magnitude component positive.
  for (std::size_t k = 0; k < q; ++k) {
    double best = 0.0;
    for (std::size_t c = 0; c < d; ++c)
      if (std::abs(model.projection(c, k)) > std::abs(best)) best = model.projection(c, k);
    if (best < 0.0)
      for (std::size_t c = 0; c < d; ++c) model.projection(c, k) = -model.projection(c, k);
  }

  model.class_means = Matrix(classes, q);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> p = flda_project(model, x.row(i));
    simd::axpy(1.0, p, model.class_means.row(slot[i]));
  }
  for (std::size_t c = 0; c < classes; ++c)
    for (double& v : model.class_means.row(c)) v /= static_cast<double>(count[model.classes[c]]);
  return model;
}

std::vector<double> flda_project(const FldaModel& model, std::span<const double> x) {
  const std::size_t d = model.projection.rows(), q = model.projection.cols();
  if (x.size() != d)
    throw std::invalid_argument("flda: feature dimension " + std::to_string(x.size()) + " does not match model " +
                                std::to_string(d));
  std::vector<double> out(q, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    const double v = x[c] - model.center[c];
    if (v == 0.0) continue;
    auto p = model.projection.row(c);
    for (std::size_t k = 0; k < q; ++k) out[k] += v * p[k];
  }
  return out;
}

int flda_predict(const FldaModel& model, std::span<const double> x) {
  const std::vector<double> z = flda_project(model, x);
  std::size_t best = 0;
  double best_d = 0.0;
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    const double dist = simd::squared_distance(z, model.class_means.row(c));
    // Near-equal distances count as ties so that the lower class wins them.
    if (c == 0 || dist < best_d - 1e-12 * std::max(1.0, best_d)) {
      best = c;
      best_d = dist;
    }
  }
  return model.classes[best];
}

}  // namespace facelap
