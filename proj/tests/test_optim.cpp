#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "kmargin/optim.hpp"
#include "kmargin/rng.hpp"
#include "oracles.hpp"

using namespace kmargin;

namespace {

ObjectiveOracle abs_shift_oracle() {
  // f(x) = |x - 3|.
  return {1, [](const Vector& x) {
            OracleEval out;
            out.value = std::abs(x[0] - 3.0);
            out.subgradient = Vector::Constant(1, x[0] > 3.0 ? 1.0 : (x[0] < 3.0 ? -1.0 : 0.0));
            return out;
          }};
}

ObjectiveOracle norm_sq_oracle(int dim) {
  return {dim, [](const Vector& x) {
            return OracleEval{x.squaredNorm(), 2.0 * x};
          }};
}

// 0.5 max(0, 1-x) + 0.5 max(0, 1+x) + 0.1 x^2
double hinge_pair_value(double x) {
  return 0.5 * std::max(0.0, 1.0 - x) + 0.5 * std::max(0.0, 1.0 + x) + 0.1 * x * x;
}

ObjectiveOracle hinge_pair_oracle() {
  return {1, [](const Vector& v) {
            const double x = v[0];
            double g = 0.2 * x;
            if (x < 1.0) g -= 0.5;
            if (x > -1.0) g += 0.5;
            return OracleEval{hinge_pair_value(x), Vector::Constant(1, g)};
          }};
}

struct Quadratic {
  Eigen::MatrixXd a;
  Vector b;
  double optimum;  // value at the closed-form minimizer

  ObjectiveOracle oracle() const {
    return {static_cast<int>(b.size()), [this](const Vector& x) {
              return OracleEval{0.5 * x.dot(a * x) - b.dot(x), a * x - b};
            }};
  }
};

Quadratic random_quadratic(int dim, std::uint64_t seed) {
  std::mt19937_64 g = make_rng(seed);
  Eigen::MatrixXd m(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) m(i, j) = normal_double(g);
  }
  Quadratic q;
  q.a = m.transpose() * m / dim + Eigen::MatrixXd::Identity(dim, dim);
  q.b = Vector(dim);
  for (int i = 0; i < dim; ++i) q.b[i] = normal_double(g);
  const Vector star = q.a.ldlt().solve(q.b);
  q.optimum = 0.5 * star.dot(q.a * star) - q.b.dot(star);
  return q;
}

}  // namespace

TEST_CASE("reference one-dimensional problems reach their optima") {
  SUBCASE("|x - 3| lands within 1e-3 of the kink") {
    OptConfig cfg;
    cfg.max_iter = 5000;
    cfg.step_c = 1.0;
    const OptResult r = minimize(abs_shift_oracle(), Vector::Zero(1), cfg);
    CHECK(std::abs(r.minimizer[0] - 3.0) <= 1e-3);
    CHECK(r.iterations <= 5000);
  }

  SUBCASE("||x||^2 falls below 1e-6 from any start") {
    OptConfig cfg;
    cfg.max_iter = 4000;
    cfg.step_c = 0.5;  // 1/L for this objective
    Vector start(4);
    start << 2.0, -1.0, 0.5, 3.0;
    for (OptBackend backend : {OptBackend::kSubgrad, OptBackend::kBundle}) {
      cfg.backend = backend;
      const OptResult r = minimize(norm_sq_oracle(4), start, cfg);
      CHECK(r.objective <= 1e-6);
    }
  }

  SUBCASE("regularized hinge pair settles at zero, matching the grid oracle") {
    const double grid_min = oracles::grid_min_value(hinge_pair_value, -3.0, 3.0, 1e-4);
    CHECK(grid_min == doctest::Approx(1.0).epsilon(1e-9));  // flat section + 0.1 x^2
    OptConfig cfg;
    cfg.max_iter = 4000;
    cfg.step_c = 1.0;
    for (OptBackend backend : {OptBackend::kSubgrad, OptBackend::kBundle}) {
      cfg.backend = backend;
      const OptResult r = minimize(hinge_pair_oracle(), Vector::Constant(1, 2.5), cfg);
      CHECK(r.objective <= grid_min + 1e-4);
      CHECK(std::abs(r.minimizer[0]) <= 0.05);
    }
  }
}

TEST_CASE("random convex quadratics reach the closed-form optimum") {
  for (int trial = 0; trial < 10; ++trial) {
    const int dim = 1 + trial % 10;
    const Quadratic q = random_quadratic(dim, 400 + trial);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q.a);

    OptConfig cfg;
    cfg.max_iter = 5000;
    cfg.step_c = 1.0 / eig.eigenvalues().maxCoeff();

    double objectives[2];
    int bi = 0;
    for (OptBackend backend : {OptBackend::kSubgrad, OptBackend::kBundle}) {
      cfg.backend = backend;
      const ObjectiveOracle oracle = q.oracle();
      const OptResult r = minimize(oracle, Vector::Zero(dim), cfg);
      CHECK(r.objective <= q.optimum + 1e-4);
      CHECK(r.objective >= q.optimum - 1e-9);  // cannot beat the true optimum
      CHECK(r.objective == oracle.evaluate(r.minimizer).value);
      CHECK(r.iterations <= cfg.max_iter);
      CHECK(r.best_subgradient_norm >= 0.0);
      objectives[bi++] = r.objective;
    }
    CHECK(std::abs(objectives[0] - objectives[1]) <= 1e-3);
  }
}

TEST_CASE("backends agree on a nonsmooth battery") {
  // max of affine pieces plus a small quadratic keeps the minimum finite.
  std::mt19937_64 g = make_rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const int dim = 3;
    const int pieces = 5;
    Eigen::MatrixXd slopes(pieces, dim);
    Vector offsets(pieces);
    for (int p = 0; p < pieces; ++p) {
      for (int j = 0; j < dim; ++j) slopes(p, j) = normal_double(g);
      offsets[p] = normal_double(g);
    }
    const ObjectiveOracle oracle{
        dim, [&](const Vector& x) {
          int argmax = 0;
          double best = -std::numeric_limits<double>::infinity();
          for (int p = 0; p < pieces; ++p) {
            const double v = slopes.row(p).dot(x) + offsets[p];
            if (v > best) {
              best = v;
              argmax = p;
            }
          }
          return OracleEval{best + 0.05 * x.squaredNorm(),
                            slopes.row(argmax).transpose() + 0.1 * x};
        }};

    OptConfig cfg;
    cfg.max_iter = 6000;
    cfg.step_c = 1.0;
    cfg.backend = OptBackend::kSubgrad;
    const double sub = minimize(oracle, Vector::Zero(dim), cfg).objective;
    cfg.backend = OptBackend::kBundle;
    const double bun = minimize(oracle, Vector::Zero(dim), cfg).objective;
    CHECK(std::abs(sub - bun) <= 1e-3);
  }
}

TEST_CASE("minimize returns the best value it ever evaluated") {
  for (OptBackend backend : {OptBackend::kSubgrad, OptBackend::kBundle}) {
    double best_seen = std::numeric_limits<double>::infinity();
    double best_norm = std::numeric_limits<double>::infinity();
    const ObjectiveOracle oracle{
        1, [&](const Vector& x) {
          const double v = std::abs(x[0]) + 0.3 * std::abs(x[0] - 1.0);
          double grad = (x[0] >= 0.0 ? 1.0 : -1.0) + 0.3 * (x[0] >= 1.0 ? 1.0 : -1.0);
          best_seen = std::min(best_seen, v);
          best_norm = std::min(best_norm, std::abs(grad));
          return OracleEval{v, Vector::Constant(1, grad)};
        }};
    OptConfig cfg;
    cfg.max_iter = 500;
    cfg.step_c = 1.0;
    cfg.backend = backend;
    const OptResult r = minimize(oracle, Vector::Constant(1, -2.0), cfg);
    CHECK(r.objective == best_seen);
    CHECK(r.best_subgradient_norm == doctest::Approx(best_norm).epsilon(1e-12));
    CHECK(std::abs(r.minimizer[0]) <= 0.05);  // true minimum at x = 0
  }
}

TEST_CASE("non-finite oracle output aborts with the iterate in the message") {
  const ObjectiveOracle oracle{
      2, [](const Vector&) {
        return OracleEval{std::numeric_limits<double>::quiet_NaN(), Vector::Zero(2)};
      }};
  Vector start(2);
  start << 1.5, -2.0;
  OptConfig cfg;
  try {
    minimize(oracle, start, cfg);
    FAIL("expected std::runtime_error");
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("non-finite") != std::string::npos);
    CHECK(what.find("1.5") != std::string::npos);
    CHECK(what.find("-2") != std::string::npos);
  }
}

TEST_CASE("configuration and start vectors are validated") {
  const ObjectiveOracle oracle = norm_sq_oracle(3);
  OptConfig cfg;
  CHECK_THROWS_AS(minimize(oracle, Vector::Zero(2), cfg), std::invalid_argument);
  cfg.max_iter = 0;
  CHECK_THROWS_AS(minimize(oracle, Vector::Zero(3), cfg), std::invalid_argument);
  cfg.max_iter = 10;
  cfg.step_c = 0.0;
  CHECK_THROWS_AS(minimize(oracle, Vector::Zero(3), cfg), std::invalid_argument);
  CHECK(parse_backend("subgrad") == OptBackend::kSubgrad);
  CHECK(parse_backend("bundle") == OptBackend::kBundle);
  CHECK(backend_name(OptBackend::kBundle) == "bundle");
  CHECK_THROWS_AS(parse_backend("newton"), std::invalid_argument);
}

TEST_CASE("identical inputs produce identical results") {
  const Quadratic q = random_quadratic(6, 909);
  OptConfig cfg;
  cfg.max_iter = 800;
  cfg.step_c = 0.3;
  for (OptBackend backend : {OptBackend::kSubgrad, OptBackend::kBundle}) {
    cfg.backend = backend;
    const OptResult a = minimize(q.oracle(), Vector::Zero(6), cfg);
    const OptResult b = minimize(q.oracle(), Vector::Zero(6), cfg);
    CHECK((a.minimizer - b.minimizer).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.objective == b.objective);
    CHECK(a.iterations == b.iterations);
    CHECK(a.best_subgradient_norm == b.best_subgradient_norm);
  }
}

TEST_CASE("simplex QP solve matches exhaustive subset enumeration") {
  std::mt19937_64 g = make_rng(555);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + trial % 7;
    Eigen::MatrixXd mat(m, m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) mat(i, j) = normal_double(g);
    }
    if (m > 1 && trial % 4 == 0) mat.row(m - 1) = mat.row(0);  // rank-deficient case
    Eigen::MatrixXd q = mat.transpose() * mat + 1e-3 * Eigen::MatrixXd::Identity(m, m);
    Vector b(m);
    for (int i = 0; i < m; ++i) b[i] = normal_double(g);

    const Vector x = detail::solve_simplex_qp(q, b);
    REQUIRE(x.size() == m);
    CHECK(x.minCoeff() >= -1e-12);
    CHECK(std::abs(x.sum() - 1.0) <= 1e-10);

    Vector brute_x;
    const double brute = oracles::simplex_qp_min(q, b, &brute_x);
    const double value = 0.5 * x.dot(q * x) - b.dot(x);
    CHECK(value <= brute + 1e-8 * (1.0 + std::abs(brute)));

    // Warm starts change nothing about the answer.
    const Vector hinted = detail::solve_simplex_qp(q, b, &brute_x);
    const double hinted_value = 0.5 * hinted.dot(q * hinted) - b.dot(hinted);
    CHECK(hinted_value <= brute + 1e-8 * (1.0 + std::abs(brute)));
    const Vector uniform = Vector::Constant(m, 1.0 / m);
    const Vector hinted2 = detail::solve_simplex_qp(q, b, &uniform);
    const double hinted2_value = 0.5 * hinted2.dot(q * hinted2) - b.dot(hinted2);
    CHECK(hinted2_value <= brute + 1e-8 * (1.0 + std::abs(brute)));
  }
}
