#pragma once

#include <cstdint>
#include <functional>

#include "kmargin/classify.hpp"
#include "kmargin/losses.hpp"

namespace kmargin {

// Finite joint distribution of (X, Y): atoms x_j with marginal mass p_j
// and conditional eta_j = P(Y = +1 | X = x_j). Risks are exact sums.
struct DiscreteJoint {
  Matrix support;  // m x d, one atom per row
  Vector p;        // marginal, sums to 1
  Vector eta;      // conditionals in [0,1]

  int atoms() const { return static_cast<int>(support.rows()); }
  int dim() const { return static_cast<int>(support.cols()); }
  void validate() const;  // throws std::invalid_argument
};

using DecisionFn = std::function<double(const Vector&)>;

// Misclassification risk with the predictor convention sign(0) = +1.
double risk(const DiscreteJoint& d, const DecisionFn& f);
// Bayes risk: sum_j p_j min(eta_j, 1 - eta_j).
double bayes_risk(const DiscreteJoint& d);
double phi_risk(const DiscreteJoint& d, const DecisionFn& f, LossKind loss);
// Pointwise-minimal surrogate risk: sum_j p_j H(eta_j).
double optimal_phi_risk(const DiscreteJoint& d, LossKind loss);

struct PsiBoundCheck {
  double excess_risk;      // R(f) - R*
  double excess_phi_risk;  // R_phi(f) - R_phi*
  double psi_value;        // psi_transform(loss, excess_risk)
  bool holds;              // psi_value <= excess_phi_risk + 1e-9
};
PsiBoundCheck check_psi_bound(const DiscreteJoint& d, const DecisionFn& f,
                              LossKind loss);

LabeledDataset sample(const DiscreteJoint& d, int n, std::uint64_t seed);

// Two-component 1-d gaussian mixture with equal priors; labels are the
// components. Bayes risk is computed once by adaptive quadrature.
class MixtureBenchmark {
 public:
  MixtureBenchmark(double mean_neg, double mean_pos, double sigma);
  MixtureBenchmark() : MixtureBenchmark(-1.0, 1.0, 1.0) {}

  double mean_neg() const { return mean_neg_; }
  double mean_pos() const { return mean_pos_; }
  double sigma() const { return sigma_; }
  double eta(double x) const;      // P(Y = +1 | X = x)
  double density(double x) const;  // marginal density
  double bayes_risk() const { return bayes_risk_; }

 private:
  double mean_neg_, mean_pos_, sigma_;
  double bayes_risk_;
};

double mixture_bayes_risk(const MixtureBenchmark& b);
LabeledDataset sample(const MixtureBenchmark& b, int n, std::uint64_t seed);

// Adaptive Simpson quadrature to absolute tolerance; deterministic.
double adaptive_quadrature(const std::function<double(double)>& f, double lo,
                           double hi, double abs_tol);

}  // namespace kmargin
