#include "kmargin/classify.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kmargin/rng.hpp"

namespace kmargin {

namespace {

// Spectral-norm estimate by power iteration; K is symmetric PSD, so the
// dominant eigenvalue is the norm. The start is a fixed pseudorandom
// vector — a structured start (e.g. all-ones) can be exactly orthogonal
// to the dominant eigenvector. Falls back to the trace, which bounds the
// top eigenvalue from above for PSD matrices.
double spectral_norm_estimate(const Matrix& k) {
  const int n = static_cast<int>(k.rows());
  std::mt19937_64 g = make_rng(0x73706563ULL, 0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal_double(g);
  v.normalize();
  double lam = 0.0;
  for (int t = 0; t < 60; ++t) {
    Vector w = k * v;
    const double norm = w.norm();
    if (norm <= 0.0) break;
    v = w / norm;
    lam = norm;
  }
  return lam > 0.0 ? lam : std::max(k.trace(), 1e-12);
}

void check_query(const Model& model, const Vector& x) {
  if (x.size() != model.points.cols()) {
    throw std::invalid_argument("query dimension does not match the model");
  }
}

}  // namespace

void LabeledDataset::validate() const {
  if (points.rows() == 0) throw std::invalid_argument("dataset is empty");
  if (labels.size() != points.rows()) {
    throw std::invalid_argument("dataset points/labels length mismatch");
  }
  for (int i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1) {
      throw std::invalid_argument("labels must be -1 or +1");
    }
  }
}

namespace {

// Full objective J(c) = (1/n) sum phi(y_i (Kc)_i) + lambda c'Kc.
double full_objective(const Matrix& k, const Vector& y, LossKind loss,
                      double lambda, const Vector& c) {
  const int n = static_cast<int>(y.size());
  Vector kc = k * c;
  double avg = 0.0;
  for (int i = 0; i < n; ++i) avg += loss_value(loss, y[i] * kc[i]);
  return avg / n + lambda * c.dot(kc);
}

// Minimize J restricted to the coordinates in `free` (others pinned at
// zero); all n loss terms stay in play through the kept gram columns.
Vector minimize_on_support(const Matrix& k, const Vector& y, LossKind loss,
                           double lambda, const OptConfig& opt,
                           const std::vector<int>& free, const Vector& start) {
  const int n = static_cast<int>(y.size());
  const int r = static_cast<int>(free.size());
  Matrix kcols(n, r);
  for (int j = 0; j < r; ++j) kcols.col(j) = k.col(free[j]);
  Matrix krr(r, r);
  for (int i = 0; i < r; ++i) krr.row(i) = kcols.row(free[i]);

  ObjectiveOracle oracle;
  oracle.dimension = r;
  oracle.evaluate = [&](const Vector& cr) -> OracleEval {
    Vector u = kcols * cr;
    double avg = 0.0;
    Vector weights(n);  // y_i g_i with g_i in the subdifferential at the margin
    for (int i = 0; i < n; ++i) {
      const double margin = y[i] * u[i];
      avg += loss_value(loss, margin);
      weights[i] = y[i] * loss_subgradient(loss, margin);
    }
    const double value = avg / n + lambda * cr.dot(krr * cr);
    Vector grad = kcols.transpose() * (weights / n) + 2.0 * lambda * (krr * cr);
    return {value, std::move(grad)};
  };
  return minimize(oracle, start, opt).minimizer;
}

}  // namespace

Model train(const LabeledDataset& data, const Kernel& kernel, LossKind loss,
            double lambda, const TrainConfig& config) {
  data.validate();
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");

  const int n = data.n();
  const Matrix k = gram(kernel, data.points);
  const Vector y = data.labels.cast<double>();

  OptConfig opt;
  opt.max_iter = config.max_iter;
  opt.backend = config.backend;
  if (config.step_c > 0.0) {
    opt.step_c = config.step_c;
  } else {
    // Heuristic 1/L scale. The loss term's Hessian in c is bounded by
    // curv * |K|^2 / n (margin curvature chained through the gram twice)
    // and the regularizer adds 2 lambda |K|; the piecewise-linear hinge
    // contributes through its subgradient scale instead.
    double curv = 0.0;
    switch (loss) {
      case LossKind::kHinge: curv = 0.0; break;
      case LossKind::kLogistic: curv = 0.4; break;
      case LossKind::kExponential: curv = 8.0; break;
      case LossKind::kQuadratic: curv = 2.0; break;
    }
    const double top = spectral_norm_estimate(k);
    const double lip = top * top * curv / n + top * (2.0 * lambda + 2.0 / n);
    opt.step_c = 1.0 / std::max(lip, 1e-12);
  }

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  Vector c = minimize_on_support(k, y, loss, lambda, opt, all, Vector::Zero(n));
  double c_obj = full_objective(k, y, loss, lambda, c);

  // Active-set polish. At a stationary point with nonsingular gram the
  // coefficient of every example whose loss term is flat (zero
  // subgradient, e.g. hinge margin beyond the kink) is exactly zero;
  // first-order iterates only creep toward those zeros. Pin the flat
  // coordinates and re-solve over the rest. Both objective values carry
  // first-order solver noise, so acceptance allows a slack of that
  // order; the value at c = 0 stays a hard ceiling, which keeps
  // J(c) <= phi(0) — and with it the norm bound — exact.
  const double zero_obj = loss_value(loss, 0.0);
  for (int round = 0; round < 6; ++round) {
    Vector kc = k * c;
    std::vector<int> support;
    for (int i = 0; i < n; ++i) {
      // Keep any coordinate whose loss term is not flat at the margin
      // with a little slack: a boundary example (margin at the kink)
      // carries weight at the optimum and must never be pinned.
      const double margin = y[i] * kc[i];
      if (loss_subgradient(loss, margin) != 0.0 ||
          loss_subgradient(loss, margin - 1e-3) != 0.0) {
        support.push_back(i);
      }
    }
    const int r = static_cast<int>(support.size());
    if (r == 0 || r == n) break;
    Vector start(r);
    for (int j = 0; j < r; ++j) start[j] = c[support[j]];
    Vector cr = minimize_on_support(k, y, loss, lambda, opt, support, start);
    Vector candidate = Vector::Zero(n);
    for (int j = 0; j < r; ++j) candidate[support[j]] = cr[j];
    const double cand_obj = full_objective(k, y, loss, lambda, candidate);
    const double slack = 1e-7 * (1.0 + std::abs(c_obj));
    if (cand_obj > std::min(c_obj + slack, zero_obj)) break;
    const bool same_support = (candidate.array() != 0.0).count() ==
                              (c.array() != 0.0).count();
    c = std::move(candidate);
    c_obj = cand_obj;
    if (same_support) break;
  }

  Model model;
  model.kernel = kernel;
  model.loss = loss;
  model.lambda = lambda;
  model.points = data.points;
  model.coefficients = c;
  model.format_version = kModelFormatVersion;
  return model;
}

double decision(const Model& model, const Vector& x) {
  check_query(model, x);
  double sum = 0.0;
  for (int i = 0; i < model.points.rows(); ++i) {
    sum += model.coefficients[i] *
           model.kernel.eval(model.points.row(i).transpose(), x);
  }
  return sum;
}

Vector decision_batch(const Model& model, const Matrix& xs) {
  Vector out(xs.rows());
  for (int j = 0; j < xs.rows(); ++j) {
    out[j] = decision(model, xs.row(j).transpose());
  }
  return out;
}

int predict(const Model& model, const Vector& x) {
  return decision(model, x) >= 0.0 ? 1 : -1;
}

double objective_value(const Model& model, const LabeledDataset& data) {
  data.validate();
  const Vector f = decision_batch(model, data.points);
  double avg = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    avg += loss_value(model.loss, data.labels[i] * f[i]);
  }
  return avg / data.n() + model.lambda * rkhs_norm_sq(model);
}

double rkhs_norm_sq(const Model& model) {
  const Matrix k = gram(model.kernel, model.points);
  return model.coefficients.dot(k * model.coefficients);
}

double support_fraction(const Model& model, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("threshold must be >= 0");
  const int n = static_cast<int>(model.coefficients.size());
  if (n == 0) return 0.0;
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(model.coefficients[i]) > threshold) ++count;
  }
  return static_cast<double>(count) / n;
}

std::optional<double> estimate_probability(const Model& model, const Vector& x) {
  return invert_link(model.loss, decision(model, x));
}

}  // namespace kmargin
