#include "kmargin/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace kmargin {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLn2 = std::log(2.0);

void check_finite_alpha(double alpha) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("loss: alpha must be finite");
}

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("loss: eta must lie in [0,1]");
}

// ln(1 + e^-a) without overflow on either tail.
double log1p_exp_neg(double a) {
  if (a >= 0.0) return std::log1p(std::exp(-a));
  return -a + std::log1p(std::exp(a));
}

double entropy_term(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

}  // namespace

LossKind parse_loss(const std::string& name) {
  if (name == "hinge") return LossKind::kHinge;
  if (name == "logistic") return LossKind::kLogistic;
  if (name == "exp") return LossKind::kExponential;
  if (name == "quad") return LossKind::kQuadratic;
  throw std::invalid_argument("unknown loss: " + name);
}

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kHinge: return "hinge";
    case LossKind::kLogistic: return "logistic";
    case LossKind::kExponential: return "exp";
    case LossKind::kQuadratic: return "quad";
  }
  return "hinge";
}

double loss_value(LossKind loss, double alpha) {
  check_finite_alpha(alpha);
  switch (loss) {
    case LossKind::kHinge: return std::max(0.0, 1.0 - alpha);
    case LossKind::kLogistic: return log1p_exp_neg(alpha) / kLn2;
    case LossKind::kExponential: return std::exp(-alpha);
    case LossKind::kQuadratic: return (1.0 - alpha) * (1.0 - alpha);
  }
  throw std::logic_error("unreachable loss kind");
}

Interval subdifferential(LossKind loss, double alpha) {
  check_finite_alpha(alpha);
  switch (loss) {
    case LossKind::kHinge:
      if (alpha < 1.0) return {-1.0, -1.0};
      if (alpha > 1.0) return {0.0, 0.0};
      return {-1.0, 0.0};
    case LossKind::kLogistic: {
      const double g = -1.0 / ((1.0 + std::exp(alpha)) * kLn2);
      return {g, g};
    }
    case LossKind::kExponential: {
      const double g = -std::exp(-alpha);
      return {g, g};
    }
    case LossKind::kQuadratic: {
      const double g = 2.0 * (alpha - 1.0);
      return {g, g};
    }
  }
  throw std::logic_error("unreachable loss kind");
}

double loss_subgradient(LossKind loss, double alpha) {
  return subdifferential(loss, alpha).hi;
}

double conditional_risk(LossKind loss, double eta, double alpha) {
  check_eta(eta);
  return eta * loss_value(loss, alpha) + (1.0 - eta) * loss_value(loss, -alpha);
}

double conditional_minimizer(LossKind loss, double eta) {
  check_eta(eta);
  switch (loss) {
    case LossKind::kHinge:
      if (eta > 0.5) return 1.0;
      if (eta < 0.5) return -1.0;
      return 0.0;
    case LossKind::kLogistic:
      if (eta == 0.0) return -kInf;
      if (eta == 1.0) return kInf;
      return std::log(eta / (1.0 - eta));
    case LossKind::kExponential:
      if (eta == 0.0) return -kInf;
      if (eta == 1.0) return kInf;
      return 0.5 * std::log(eta / (1.0 - eta));
    case LossKind::kQuadratic:
      return 2.0 * eta - 1.0;
  }
  throw std::logic_error("unreachable loss kind");
}

double optimal_conditional_risk(LossKind loss, double eta) {
  check_eta(eta);
  switch (loss) {
    case LossKind::kHinge: return 2.0 * std::min(eta, 1.0 - eta);
    case LossKind::kLogistic:
      return (entropy_term(eta) + entropy_term(1.0 - eta)) / kLn2;
    case LossKind::kExponential: return 2.0 * std::sqrt(eta * (1.0 - eta));
    case LossKind::kQuadratic: return 4.0 * eta * (1.0 - eta);
  }
  throw std::logic_error("unreachable loss kind");
}

double wrong_sign_conditional_risk(LossKind loss, double eta) {
  check_eta(eta);
  // The constrained problem is minimized at alpha = 0 for every
  // variant: the conditional risk is convex with negative slope at 0
  // on the allowed side whenever eta != 1/2, and constant-optimal at
  // eta = 1/2. Its value there is phi(0) = 1.
  return loss_value(loss, 0.0);
}

namespace {

// psi-tilde sampled on a 1e-3 grid, reduced to its lower convex hull.
// The hull is evaluated by linear interpolation between vertices.
struct PsiTable {
  std::vector<double> theta;
  std::vector<double> value;
};

PsiTable build_psi_table(LossKind loss) {
  constexpr int kGridSteps = 1000;
  std::vector<double> t(kGridSteps + 1), v(kGridSteps + 1);
  for (int i = 0; i <= kGridSteps; ++i) {
    const double theta = static_cast<double>(i) / kGridSteps;
    const double eta = 0.5 * (1.0 + theta);
    t[i] = theta;
    v[i] = wrong_sign_conditional_risk(loss, eta) - optimal_conditional_risk(loss, eta);
  }
  // Lower convex hull (monotone chain over an x-sorted sequence).
  std::vector<int> hull;
  for (int i = 0; i <= kGridSteps; ++i) {
    while (hull.size() >= 2) {
      const int a = hull[hull.size() - 2];
      const int b = hull[hull.size() - 1];
      const double cross = (t[b] - t[a]) * (v[i] - v[a]) - (v[b] - v[a]) * (t[i] - t[a]);
      if (cross <= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  PsiTable table;
  table.theta.reserve(hull.size());
  table.value.reserve(hull.size());
  for (int idx : hull) {
    table.theta.push_back(t[idx]);
    table.value.push_back(v[idx]);
  }
  return table;
}

const PsiTable& psi_table(LossKind loss) {
  static const PsiTable hinge = build_psi_table(LossKind::kHinge);
  static const PsiTable logistic = build_psi_table(LossKind::kLogistic);
  static const PsiTable exponential = build_psi_table(LossKind::kExponential);
  static const PsiTable quadratic = build_psi_table(LossKind::kQuadratic);
  switch (loss) {
    case LossKind::kHinge: return hinge;
    case LossKind::kLogistic: return logistic;
    case LossKind::kExponential: return exponential;
    case LossKind::kQuadratic: return quadratic;
  }
  throw std::logic_error("unreachable loss kind");
}

}  // namespace

double psi_transform(LossKind loss, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0))
    throw std::invalid_argument("psi_transform: theta must lie in [0,1]");
  const PsiTable& table = psi_table(loss);
  const auto it = std::upper_bound(table.theta.begin(), table.theta.end(), theta);
  if (it == table.theta.begin()) return table.value.front();
  if (it == table.theta.end()) return table.value.back();
  const auto hi = static_cast<std::size_t>(it - table.theta.begin());
  const auto lo = hi - 1;
  const double t0 = table.theta[lo], t1 = table.theta[hi];
  const double w = (theta - t0) / (t1 - t0);
  return (1.0 - w) * table.value[lo] + w * table.value[hi];
}

std::optional<double> invert_link(LossKind loss, double f_value) {
  if (!std::isfinite(f_value)) throw std::invalid_argument("invert_link: f must be finite");
  switch (loss) {
    case LossKind::kHinge: return std::nullopt;
    case LossKind::kLogistic: return 1.0 / (1.0 + std::exp(-f_value));
    case LossKind::kExponential: return 1.0 / (1.0 + std::exp(-2.0 * f_value));
    case LossKind::kQuadratic: return std::clamp(0.5 * (f_value + 1.0), 0.0, 1.0);
  }
  throw std::logic_error("unreachable loss kind");
}

}  // namespace kmargin
