#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

namespace kmargin {

using Vector = Eigen::VectorXd;

struct OracleEval {
  double value;
  Vector subgradient;
};

// Value + subgradient oracle for a convex objective. The returned
// subgradient must satisfy f(y) >= f(x) + g.(y - x) for all y.
struct ObjectiveOracle {
  int dimension;
  std::function<OracleEval(const Vector&)> evaluate;
};

enum class OptBackend { kSubgrad, kBundle };

OptBackend parse_backend(const std::string& name);  // subgrad | bundle
std::string backend_name(OptBackend backend);

struct OptConfig {
  int max_iter = 1000;
  // Step scale: subgrad uses step_c / sqrt(t); bundle uses 1/step_c as
  // its initial proximal weight.
  double step_c = 1.0;
  OptBackend backend = OptBackend::kSubgrad;
};

struct OptResult {
  Vector minimizer;      // best-objective iterate visited, not the last
  double objective;      // oracle value at the minimizer
  int iterations;        // <= config.max_iter
  double best_subgradient_norm;  // smallest subgradient norm observed
};

// Deterministic given (oracle, start, config). Stops at the iteration
// cap only; nonsmooth objectives need not have small subgradients near
// optima, so no gradient-based stop exists. Throws std::runtime_error
// with the offending iterate if the oracle returns non-finite output.
OptResult minimize(const ObjectiveOracle& oracle, const Vector& start,
                   const OptConfig& config);

namespace detail {
// min (1/2) x'Qx - b'x over the probability simplex; exact active-set
// solve with a projected-gradient fallback. A nonnegative `hint` with
// positive mass warm-starts the active set. Exposed for tests.
Vector solve_simplex_qp(const Eigen::MatrixXd& q, const Vector& b,
                        const Vector* hint = nullptr);
}  // namespace detail

}  // namespace kmargin
