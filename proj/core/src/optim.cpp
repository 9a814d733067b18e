#include "kmargin/optim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

namespace kmargin {

namespace {

using Matrix = Eigen::MatrixXd;

std::string describe_iterate(const Vector& x) {
  char buf[64];
  std::string out = "[";
  const int shown = static_cast<int>(std::min<Eigen::Index>(x.size(), 8));
  for (int i = 0; i < shown; ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.6g", i ? ", " : "", x[i]);
    out += buf;
  }
  if (x.size() > shown) out += ", ...";
  out += "]";
  return out;
}

OracleEval checked_eval(const ObjectiveOracle& oracle, const Vector& x) {
  OracleEval e = oracle.evaluate(x);
  if (!std::isfinite(e.value) || !e.subgradient.allFinite()) {
    throw std::runtime_error("optimizer oracle returned non-finite output at " +
                             describe_iterate(x));
  }
  return e;
}

struct BestTracker {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();

  void observe(const Vector& at, const OracleEval& e) {
    if (e.value < value) {
      value = e.value;
      x = at;
    }
    grad_norm = std::min(grad_norm, e.subgradient.norm());
  }
};

OptResult run_subgrad(const ObjectiveOracle& oracle, const Vector& start,
                      const OptConfig& config) {
  Vector x = start;
  OracleEval e = checked_eval(oracle, x);
  BestTracker best;
  best.observe(x, e);

  for (int t = 1; t <= config.max_iter; ++t) {
    x -= (config.step_c / std::sqrt(static_cast<double>(t))) * e.subgradient;
    e = checked_eval(oracle, x);
    best.observe(x, e);
  }
  return {best.x, best.value, config.max_iter, best.grad_norm};
}

// One cutting plane f(x_i) + g_i.(x - x_i) of the bundle model.
struct Plane {
  Vector point;
  Vector grad;
  double value;
};

constexpr int kMaxPlanes = 50;
constexpr double kDescentFrac = 0.1;  // serious-step acceptance ratio

OptResult run_bundle(const ObjectiveOracle& oracle, const Vector& start,
                     const OptConfig& config) {
  Vector center = start;
  OracleEval ce = checked_eval(oracle, center);
  double center_value = ce.value;
  BestTracker best;
  best.observe(center, ce);

  std::vector<Plane> planes;
  planes.push_back({center, ce.subgradient, ce.value});
  Matrix gram = Matrix::Constant(1, 1, ce.subgradient.squaredNorm());

  // Proximal penalty mu; the step parameter is its inverse, so doubling mu
  // halves the proximal step after a failed (null) candidate. Serious steps
  // relax mu so a conservative initial step scale cannot throttle the
  // method, while the cap keeps the subproblem from ratcheting into a
  // cutting-plane LP.
  const double mu0 = 1.0 / config.step_c;
  const double mu_floor = mu0 * 1e-4;
  const double mu_cap = mu0 * 1e6;
  double mu = mu0;

  int iters = 0;
  Vector warm;  // previous dual weights, maintained as the QP warm start
  for (int t = 1; t <= config.max_iter; ++t) {
    iters = t;
    const int m = static_cast<int>(planes.size());

    // Dual of the proximal subproblem min_x model(x) + (mu/2)|x-center|^2:
    // min over the simplex of (1/(2mu)) |G w|^2 - chat.w, where chat_i is
    // plane i evaluated at the center.
    Vector chat(m);
    for (int i = 0; i < m; ++i) {
      chat[i] = planes[i].value + planes[i].grad.dot(center - planes[i].point);
    }
    Vector weights = detail::solve_simplex_qp(
        gram.topLeftCorner(m, m) / mu, chat,
        warm.size() == m ? &warm : nullptr);

    Vector aggregate = Vector::Zero(center.size());
    for (int i = 0; i < m; ++i) aggregate += weights[i] * planes[i].grad;
    Vector candidate = center - aggregate / mu;

    // Dual optimum equals the subproblem value; the gap to the center
    // value is the model's predicted decrease.
    const double model_value =
        chat.dot(weights) - aggregate.squaredNorm() / (2.0 * mu);
    const double predicted = std::max(center_value - model_value, 0.0);

    OracleEval e = checked_eval(oracle, candidate);
    best.observe(candidate, e);

    if (center_value - e.value >= kDescentFrac * predicted && e.value < center_value) {
      center = candidate;
      center_value = e.value;
      mu = std::max(0.5 * mu, mu_floor);
    } else {
      mu = std::min(2.0 * mu, mu_cap);
    }

    // Grow the bundle; gram rows track grad-grad inner products.
    Vector cross(m + 1);
    for (int i = 0; i < m; ++i) cross[i] = planes[i].grad.dot(e.subgradient);
    cross[m] = e.subgradient.squaredNorm();
    if (gram.rows() < m + 1) {
      gram.conservativeResize(m + 1, m + 1);
    }
    gram.block(m, 0, 1, m) = cross.head(m).transpose();
    gram.block(0, m, m, 1) = cross.head(m);
    gram(m, m) = cross[m];
    planes.push_back({candidate, e.subgradient, e.value});
    warm = Vector::Zero(m + 1);
    warm.head(m) = weights;

    if (static_cast<int>(planes.size()) > kMaxPlanes) {
      // Drop the old plane the dual cares least about; ties pick the
      // oldest. The just-added plane is never a candidate.
      int drop = 0;
      for (int i = 1; i < m; ++i) {
        if (weights[i] < weights[drop]) drop = i;
      }
      planes.erase(planes.begin() + drop);
      const int nm = static_cast<int>(planes.size());
      // Delete row/col `drop` by shifting the trailing block.
      for (int r = drop; r < nm; ++r) {
        for (int c = 0; c <= nm; ++c) gram(r, c) = gram(r + 1, c);
      }
      for (int c = drop; c < nm; ++c) {
        for (int r = 0; r < nm; ++r) gram(r, c) = gram(r, c + 1);
      }
      for (int i = drop; i < nm; ++i) warm[i] = warm[i + 1];
      warm.conservativeResize(nm);
    }
  }
  return {best.x, best.value, iters, best.grad_norm};
}

}  // namespace

OptBackend parse_backend(const std::string& name) {
  if (name == "subgrad") return OptBackend::kSubgrad;
  if (name == "bundle") return OptBackend::kBundle;
  throw std::invalid_argument("unknown optimizer backend: " + name);
}

std::string backend_name(OptBackend backend) {
  return backend == OptBackend::kSubgrad ? "subgrad" : "bundle";
}

OptResult minimize(const ObjectiveOracle& oracle, const Vector& start,
                   const OptConfig& config) {
  if (oracle.dimension != start.size()) {
    throw std::invalid_argument("optimizer start point has wrong dimension");
  }
  if (config.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(config.step_c > 0.0)) throw std::invalid_argument("step_c must be > 0");
  return config.backend == OptBackend::kSubgrad
             ? run_subgrad(oracle, start, config)
             : run_bundle(oracle, start, config);
}

namespace detail {

namespace {

// Equality-constrained solve on the working set: minimize the quadratic
// subject to the weights summing to one, free coordinates in `active`.
// Returns the KKT multiplier for the sum constraint through `nu`.
Vector solve_on_active(const Matrix& q, const Vector& b,
                       const std::vector<int>& active, double* nu) {
  const int k = static_cast<int>(active.size());
  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  Vector rhs(k + 1);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) kkt(i, j) = q(active[i], active[j]);
    kkt(i, k) = kkt(k, i) = 1.0;
    rhs[i] = b[active[i]];
  }
  // Tiny ridge keeps the factorization stable when planes duplicate.
  const double ridge = 1e-13 * (1.0 + q.diagonal().maxCoeff());
  for (int i = 0; i < k; ++i) kkt(i, i) += ridge;
  rhs[k] = 1.0;
  Vector sol = kkt.ldlt().solve(rhs);
  *nu = sol[k];
  return sol.head(k);
}

Vector project_to_simplex(Vector v) {
  // Euclidean projection (sort-based).
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  int support = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cum += u[i];
    const double candidate = (cum - 1.0) / static_cast<double>(i + 1);
    if (u[i] - candidate > 0.0) {
      tau = candidate;
      support = static_cast<int>(i + 1);
    }
  }
  (void)support;
  for (int i = 0; i < v.size(); ++i) v[i] = std::max(v[i] - tau, 0.0);
  return v;
}

// Projected-gradient fallback for the rare case the active-set loop
// fails to terminate (degenerate gram matrices).
Vector pg_fallback(const Matrix& q, const Vector& b) {
  const int m = static_cast<int>(b.size());
  double lip = q.cwiseAbs().rowwise().sum().maxCoeff();
  if (!(lip > 0.0)) lip = 1.0;
  Vector x = Vector::Constant(m, 1.0 / m);
  double prev = 0.5 * x.dot(q * x) - b.dot(x);
  for (int t = 1; t <= 2000; ++t) {
    x = project_to_simplex(x - (q * x - b) / lip);
    if (t % 50 == 0) {
      const double cur = 0.5 * x.dot(q * x) - b.dot(x);
      if (prev - cur <= 1e-14 * (1.0 + std::abs(prev))) break;
      prev = cur;
    }
  }
  return x;
}

}  // namespace

Vector solve_simplex_qp(const Matrix& q, const Vector& b, const Vector* hint) {
  const int m = static_cast<int>(b.size());
  if (m == 1) return Vector::Ones(1);

  const double scale = 1.0 + std::max(q.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  const double tol = 1e-11 * scale;

  Vector x;
  std::vector<int> active;
  if (hint != nullptr && hint->size() == m && hint->allFinite() &&
      hint->minCoeff() >= 0.0 && hint->sum() > 0.0) {
    x = *hint / hint->sum();
    for (int j = 0; j < m; ++j) {
      if (x[j] > 1e-12) active.push_back(j);
    }
  }
  if (active.empty()) {
    // Start from the best single vertex (lowest index on ties).
    int start = 0;
    double start_obj = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      const double obj = 0.5 * q(j, j) - b[j];
      if (obj < start_obj) {
        start_obj = obj;
        start = j;
      }
    }
    x = Vector::Zero(m);
    x[start] = 1.0;
    active = {start};
  }

  const auto objective = [&](const Vector& v) {
    return 0.5 * v.dot(q * v) - b.dot(v);
  };
  Vector best_x = x;
  double best_obj = objective(x);
  int stalled = 0;

  // Active-set exchanges converge in a handful of passes on healthy
  // problems. Degenerate instances (near-duplicate planes) cannot
  // certify the KKT tolerance in floating point, so the loop returns
  // the best visited point once passes stop paying for themselves.
  for (int pass = 0; pass < 3 * m + 20; ++pass) {
    double nu = 0.0;
    Vector sub = solve_on_active(q, b, active, &nu);

    if (sub.minCoeff() >= -tol) {
      Vector next = Vector::Zero(m);
      for (std::size_t i = 0; i < active.size(); ++i) {
        next[active[i]] = std::max(sub[static_cast<int>(i)], 0.0);
      }
      next /= next.sum();
      x = next;
      const double obj = objective(x);
      if (obj < best_obj - 1e-13 * (1.0 + std::abs(best_obj))) {
        best_obj = obj;
        best_x = x;
        stalled = 0;
      } else if (++stalled >= 6) {
        return best_x;
      }
      if (obj < best_obj) {
        best_obj = obj;
        best_x = x;
      }
      // KKT check on the inactive coordinates. Active coordinates satisfy
      // (Qx - b)_i = -nu, so shifting mass onto a zero coordinate j is a
      // descent direction exactly when grad_j + nu < 0.
      Vector grad = q * x - b;
      int enter = -1;
      double worst = -tol;
      for (int j = 0; j < m; ++j) {
        if (x[j] > 0.0) continue;
        const double reduced = grad[j] + nu;
        if (reduced < worst) {
          worst = reduced;
          enter = j;
        }
      }
      if (enter < 0) return best_x;
      active.clear();
      for (int j = 0; j < m; ++j) {
        if (x[j] > 0.0) active.push_back(j);
      }
      active.push_back(enter);
      std::sort(active.begin(), active.end());
      continue;
    }

    // Step toward the equality solution until a coordinate hits zero.
    double alpha = 1.0;
    int leave = -1;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double cur = x[active[i]];
      const double tgt = sub[static_cast<int>(i)];
      if (tgt < cur) {
        const double a = cur / (cur - tgt);
        if (a < alpha) {
          alpha = a;
          leave = active[i];
        }
      }
    }
    for (std::size_t i = 0; i < active.size(); ++i) {
      const int j = active[i];
      x[j] += alpha * (sub[static_cast<int>(i)] - x[j]);
    }
    if (leave >= 0) {
      x[leave] = 0.0;
      active.erase(std::find(active.begin(), active.end(), leave));
    }
    const double obj = objective(x);
    if (obj < best_obj) {
      best_obj = obj;
      best_x = x;
    }
    if (active.empty()) break;  // defensive; cannot happen with sum = 1
  }
  if (best_obj <= objective(x)) return best_x;
  return pg_fallback(q, b);
}

}  // namespace detail

}  // namespace kmargin
