// Acceptance battery. Ten numbered criteria, each printed as exactly one
//   PASS|FAIL <k>. <name>: <detail> (<seconds>s)
// line; the process exits 0 iff every criterion passes. Tolerances are
// pinned here, next to the checks they govern, and are not configurable.
//
// Statistical criteria run through the named experiments at seed 1 with
// the default kernel/loss/schedule, so the battery measures exactly what
// the `experiment` subcommand reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "kmargin/analysis.hpp"
#include "kmargin/classify.hpp"
#include "kmargin/experiments.hpp"
#include "kmargin/kernels.hpp"
#include "kmargin/losses.hpp"
#include "kmargin/rng.hpp"

namespace {

using namespace kmargin;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Runs a named experiment with library defaults and folds its verdicts
// into a single outcome: pass iff every verdict passes.
Outcome from_experiment(const std::string& name) {
  ExperimentConfig config;
  config.name = name;
  config.seed = 1;
  const ExperimentReport report = run_experiment(config);
  Outcome out;
  out.pass = report.all_pass();
  std::string joined;
  for (const auto& v : report.verdicts) {
    if (!joined.empty()) joined += "; ";
    joined += std::string(v.pass ? "" : "[FAIL] ") + v.detail;
  }
  out.detail = joined;
  return out;
}

// --- 1. The hinge psi-transform is the identity on [0, 1]. -----------------

Outcome check_hinge_identity() {
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double theta = i / 1000.0;
    worst = std::max(worst, std::abs(psi_transform(LossKind::kHinge, theta) - theta));
  }
  Outcome out;
  out.pass = worst <= 1e-6;
  out.detail = fmt("max |psi(theta) - theta| = %.3g over 1001 grid points (tol 1e-6)",
                   worst);
  return out;
}

// --- 7. Exhaustive-search optimality on tiny problems. ----------------------
//
// For every n <= 3 instance below, the trained objective must not exceed
// the minimum of J over the coefficient grid [-5, 5]^n (step 0.05) by more
// than 1e-2. The grid is an independent oracle: it never calls the
// optimizer.

double grid_objective_min(const Matrix& gram_matrix, const Eigen::VectorXi& labels,
                          LossKind loss, double lambda) {
  const int n = static_cast<int>(gram_matrix.rows());
  const int steps = 201;  // -5.00, -4.95, ..., 5.00
  double k[3][3];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) k[i][j] = gram_matrix(i, j);
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(n, 0);
  std::vector<double> c(n, 0.0);
  while (true) {
    for (int i = 0; i < n; ++i) c[i] = -5.0 + 0.05 * idx[i];
    double data_term = 0.0, reg = 0.0;
    for (int i = 0; i < n; ++i) {
      double kci = 0.0;
      for (int j = 0; j < n; ++j) kci += k[i][j] * c[j];
      data_term += loss_value(loss, labels[i] * kci);
      reg += c[i] * kci;
    }
    best = std::min(best, data_term / n + lambda * reg);
    int axis = 0;
    while (axis < n && ++idx[axis] == steps) idx[axis++] = 0;
    if (axis == n) break;
  }
  return best;
}

Outcome check_small_sample_optimality() {
  struct Instance {
    std::vector<Vector> points;
    std::vector<int> labels;
  };
  std::vector<Instance> instances;
  {
    Instance one;
    one.points.push_back(Vector::Constant(1, 0.7));
    one.labels = {1};
    instances.push_back(one);
  }
  {
    Instance two;
    Vector a(2), b(2);
    a << 0.6, 0.8;
    b << -0.9, 0.2;
    two.points = {a, b};
    two.labels = {1, -1};
    instances.push_back(two);
  }
  {
    Instance three;
    Vector a(2), b(2), c(2);
    a << 1.0, 0.1;
    b << -0.4, -0.8;
    c << 0.2, 0.9;
    three.points = {a, b, c};
    three.labels = {1, -1, 1};
    instances.push_back(three);
  }

  const std::vector<Kernel> kernels = {Kernel::linear(), Kernel::gaussian(1.0)};
  const std::vector<LossKind> losses = {LossKind::kHinge, LossKind::kQuadratic};
  double worst_gap = -std::numeric_limits<double>::infinity();
  int cases = 0;
  for (const Instance& inst : instances) {
    const int n = static_cast<int>(inst.points.size());
    LabeledDataset data;
    data.points.resize(n, inst.points[0].size());
    data.labels.resize(n);
    for (int i = 0; i < n; ++i) {
      data.points.row(i) = inst.points[i].transpose();
      data.labels[i] = inst.labels[i];
    }
    for (const Kernel& kernel : kernels) {
      for (LossKind loss : losses) {
        const double lambda = (cases % 2 == 0) ? 0.1 : 0.05;
        TrainConfig tc;
        tc.max_iter = 2000;
        tc.backend = OptBackend::kBundle;
        const Model model = train(data, kernel, loss, lambda, tc);
        const double trained = objective_value(model, data);
        const double gridded =
            grid_objective_min(gram(kernel, data.points), data.labels, loss, lambda);
        worst_gap = std::max(worst_gap, trained - gridded);
        ++cases;
      }
    }
  }
  Outcome out;
  out.pass = worst_gap <= 1e-2;
  out.detail = fmt("max (trained - grid minimum) = %.3g over %d instances (tol 1e-2)",
                   worst_gap, cases);
  return out;
}

// --- 10. Incomplete Cholesky contracts. -------------------------------------

Outcome check_incomplete_cholesky() {
  bool ok = true;
  std::string detail;

  // Full factorization of a numeric Gaussian gram reconstructs K.
  {
    const int n = 60;
    std::mt19937_64 g = make_rng(11);
    Matrix pts(n, 3);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) pts(i, j) = normal_double(g);
    }
    const Kernel kernel = Kernel::gaussian(0.8);
    const Matrix k = gram(kernel, pts);
    std::size_t evals = 0;
    const LowRankFactor f = incomplete_cholesky(kernel, pts, 1e-12, n, &evals);
    const int rank = static_cast<int>(f.factor.cols());
    const double recon =
        (k - f.factor * f.factor.transpose()).cwiseAbs().maxCoeff();
    const std::size_t budget =
        static_cast<std::size_t>(n) * static_cast<std::size_t>(rank + 1);
    ok = ok && recon <= 1e-8 && evals <= budget;
    detail += fmt("gauss n=%d: reconstruction %.2g (tol 1e-8), %zu evals <= %zu",
                  n, recon, evals, budget);
  }

  // Early stop honors the trace tolerance and certifies the residual.
  {
    const int n = 80;
    std::mt19937_64 g = make_rng(12);
    Matrix pts(n, 2);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 2; ++j) pts(i, j) = 0.4 * normal_double(g);
    }
    const Kernel kernel = Kernel::gaussian(1.5);
    const Matrix k = gram(kernel, pts);
    const double tol = 1e-3;
    std::size_t evals = 0;
    const LowRankFactor f = incomplete_cholesky(kernel, pts, tol, n, &evals);
    const int rank = static_cast<int>(f.factor.cols());
    const double actual = (k - f.factor * f.factor.transpose()).trace();
    const std::size_t budget =
        static_cast<std::size_t>(n) * static_cast<std::size_t>(rank + 1);
    const bool certified = std::abs(f.residual_trace - actual) <= 1e-8;
    ok = ok && f.residual_trace <= tol && certified && evals <= budget;
    detail += fmt("; early stop rank %d: residual %.2g <= %.0e, certificate off by "
                  "%.1g, %zu evals <= %zu",
                  rank, f.residual_trace, tol, std::abs(f.residual_trace - actual),
                  evals, budget);
  }

  // The string kernel goes through the same factorization path.
  {
    const std::vector<std::string> docs = {"abab", "baba", "aabb", "abba",
                                           "bbaa", "abab", "baab"};
    const Kernel kernel = Kernel::spectrum(2);
    const Matrix k = gram(kernel, docs);
    std::size_t evals = 0;
    const LowRankFactor f =
        incomplete_cholesky(kernel, docs, 1e-10, static_cast<int>(docs.size()), &evals);
    const double recon =
        (k - f.factor * f.factor.transpose()).cwiseAbs().maxCoeff();
    const std::size_t budget =
        static_cast<std::size_t>(docs.size()) *
        static_cast<std::size_t>(f.factor.cols() + 1);
    ok = ok && recon <= 1e-8 && evals <= budget;
    detail += fmt("; spectrum strings: reconstruction %.2g", recon);
  }

  Outcome out;
  out.pass = ok;
  out.detail = detail;
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*check)();
  };
  const std::vector<Criterion> criteria = {
      {"hinge_psi_identity", check_hinge_identity},
      {"psi_excess_risk_bound", [] { return from_experiment("psi_bound"); }},
      {"sieve_norm_bound", [] { return from_experiment("sieve_bound"); }},
      {"support_vector_fraction", [] { return from_experiment("sv_fraction"); }},
      {"probability_calibration", [] { return from_experiment("calibration"); }},
      {"classification_consistency", [] { return from_experiment("consistency"); }},
      {"exact_small_sample_optimality", check_small_sample_optimality},
      {"independence_test_power", [] { return from_experiment("cca_power"); }},
      {"sdr_direction_recovery", [] { return from_experiment("sdr_recovery"); }},
      {"low_rank_factorization", check_incomplete_cholesky},
  };

  bool all_pass = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].check();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("%s %zu. %s: %s (%.1fs)\n", outcome.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].name, outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    all_pass = all_pass && outcome.pass;
  }
  return all_pass ? 0 : 1;
}
