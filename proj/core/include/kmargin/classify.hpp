#pragma once

#include <optional>

#include "kmargin/kernels.hpp"
#include "kmargin/losses.hpp"
#include "kmargin/optim.hpp"

namespace kmargin {

struct LabeledDataset {
  Matrix points;           // n x d, one point per row
  Eigen::VectorXi labels;  // entries in {-1, +1}

  int n() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
  void validate() const;  // throws std::invalid_argument
};

constexpr int kModelFormatVersion = 1;

// Regularized large-margin classifier in representer form:
// f(x) = sum_i c_i k(x_i, x). No intercept.
struct Model {
  Kernel kernel = Kernel::linear();
  LossKind loss = LossKind::kHinge;
  double lambda = 0.0;
  Matrix points;        // training points, n x d
  Vector coefficients;  // length n
  int format_version = kModelFormatVersion;
};

struct TrainConfig {
  int max_iter = 600;
  // <= 0 selects a step scale from a power-iteration estimate of the
  // gram spectral norm; > 0 is passed through to the optimizer.
  double step_c = 0.0;
  OptBackend backend = OptBackend::kSubgrad;
};

// Minimizes J(c) = (1/n) sum_i phi(y_i (Kc)_i) + lambda c'Kc from c = 0,
// so the best-so-far objective never exceeds J(0) = phi(0) = 1 and the
// sieve bound c'Kc <= phi(0)/lambda holds along the whole trajectory.
Model train(const LabeledDataset& data, const Kernel& kernel, LossKind loss,
            double lambda, const TrainConfig& config = {});

double decision(const Model& model, const Vector& x);
Vector decision_batch(const Model& model, const Matrix& xs);
int predict(const Model& model, const Vector& x);  // sign(0) = +1
// J at the model's coefficients: (1/n) sum_i phi(y_i f(x_i)) + lambda c'Kc.
double objective_value(const Model& model, const LabeledDataset& data);
double rkhs_norm_sq(const Model& model);           // c'Kc
// Fraction of coefficients with |c_i| > threshold.
double support_fraction(const Model& model, double threshold = 1e-6);
// Posterior estimate through the loss link; nullopt for hinge, whose
// minimizer carries no probability information.
std::optional<double> estimate_probability(const Model& model, const Vector& x);

}  // namespace kmargin
