#pragma once

#include <optional>
#include <string>

namespace kmargin {

// Convex margin losses. All four are scaled so that phi(0) = 1, which
// keeps the norm bound ||f||^2 <= phi(0)/lambda uniform across losses
// (for the logistic loss this means binomial deviance divided by ln 2).
enum class LossKind { kHinge, kLogistic, kExponential, kQuadratic };

LossKind parse_loss(const std::string& name);  // hinge | logistic | exp | quad
std::string loss_name(LossKind kind);

double loss_value(LossKind loss, double alpha);

// Closed interval of subgradients; a singleton wherever the loss is
// differentiable.
struct Interval {
  double lo;
  double hi;
};
Interval subdifferential(LossKind loss, double alpha);

// Deterministic representative of the subdifferential (the right
// derivative at kinks).
double loss_subgradient(LossKind loss, double alpha);

// eta * phi(alpha) + (1 - eta) * phi(-alpha), eta in [0, 1].
double conditional_risk(LossKind loss, double eta, double alpha);

// Global minimizer of the conditional risk. Infinite minimizers
// (logistic/exponential at eta in {0,1}) come back as signed infinity
// and must not be fed into arithmetic.
double conditional_minimizer(LossKind loss, double eta);

// H(eta): the infimum of the conditional risk over alpha.
double optimal_conditional_risk(LossKind loss, double eta);

// H-(eta): the same infimum restricted to alpha (2 eta - 1) <= 0.
// Equals phi(0) = 1 for every variant here.
double wrong_sign_conditional_risk(LossKind loss, double eta);

// psi(theta) relating excess risk to excess phi-risk: the lower convex
// envelope of H-((1+theta)/2) - H((1+theta)/2), evaluated from hull
// samples on a 1e-3 grid. Identity for the hinge loss.
double psi_transform(LossKind loss, double theta);

// Inverse of the conditional minimizer where injective; nullopt for
// the hinge loss, whose outputs carry no probability information.
std::optional<double> invert_link(LossKind loss, double f_value);

}  // namespace kmargin
