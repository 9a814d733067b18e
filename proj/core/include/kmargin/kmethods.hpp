#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kmargin/kernels.hpp"

namespace kmargin {

struct CcaResult {
  double rho;      // first canonical correlation, clipped to [0,1]
  double rho_raw;  // pre-clip value
  Vector a, b;     // canonical coefficient vectors, length n
  double kappa;    // regularizer used
};

// First canonical correlation of the kappa-regularized centered gram
// operators: the top generalized eigenvalue of
//   [[0, K1~ K2~], [K2~ K1~, 0]] (a;b) =
//     rho [[(K1~ + (n kappa/2) I)^2, 0], [0, (K2~ + (n kappa/2) I)^2]] (a;b),
// computed as the largest singular value of R1^{-1} K1~ K2~ R2^{-1}.
CcaResult kernel_cca(const Matrix& x1s, const Matrix& x2s, const Kernel& k1,
                     const Kernel& k2, double kappa);
CcaResult kernel_cca(const std::vector<std::string>& x1s,
                     const std::vector<std::string>& x2s, const Kernel& k1,
                     const Kernel& k2, double kappa);
CcaResult kernel_cca_from_grams(const Matrix& g1, const Matrix& g2,
                                double kappa);

struct IndependenceResult {
  double rho;
  double p_value;    // add-one permutation estimate, never exactly 0
  Vector null_rhos;  // the B permutation statistics, in replicate order
};

// Permutation test of independence: shuffles x2s only; p_value =
// (1 + #{shuffled rho >= observed rho}) / (B + 1). Replicate b draws its
// permutation from stream (seed, b), so results are order-independent.
IndependenceResult independence_test(const Matrix& x1s, const Matrix& x2s,
                                     const Kernel& k1, const Kernel& k2,
                                     double kappa, int permutations,
                                     std::uint64_t seed);

// Trace of the regularized conditional covariance surrogate
//   Tr[ Gy~ (Gx_B~ + n eps I)^{-1} ],
// where Gx_B uses points projected onto the columns of B. Requires
// orthonormal B (gated at 1e-8).
double kdr_objective(const Matrix& b, const Matrix& xs, const Matrix& ys,
                     const Kernel& kx, const Kernel& ky, double epsilon);

struct SdrResult {
  Matrix b;          // d x m, orthonormal columns
  double objective;  // kdr_objective at b
  int restarts_used;
};

// Minimizes kdr_objective over orthonormal d x m frames by projected
// gradient descent (central finite differences, QR re-orthonormalization,
// backtracking from step 1.0, 200-iteration cap), best of `restarts`
// seeded random starts.
SdrResult estimate_sdr(const Matrix& xs, const Matrix& ys, int m,
                       const Kernel& kx, const Kernel& ky, double epsilon,
                       int restarts, std::uint64_t seed);

// Largest principal angle between the column spans, in degrees.
double principal_angle_degrees(const Matrix& b1, const Matrix& b2);

namespace detail {

// Exact dense objective without the orthonormality gate; finite-difference
// probes evaluate it at non-orthonormal perturbations.
double kdr_objective_raw(const Matrix& b, const Matrix& xs, const Matrix& ys,
                         const Kernel& kx, const Kernel& ky, double epsilon);

// Low-rank evaluator behind estimate_sdr: the y-side gram is factored
// once by incomplete Cholesky; each objective call factors the projected
// x-side gram and applies the Woodbury identity. Exposed for the
// finite-difference stencil cross-checks.
class KdrFastEval {
 public:
  KdrFastEval(const Matrix& xs, const Matrix& ys, const Kernel& kx,
              const Kernel& ky, double epsilon);
  double objective(const Matrix& b) const;

 private:
  Matrix xs_;
  Kernel kx_;
  double shift_;       // n * epsilon
  Matrix wy_;          // centered factor of the y gram, n x r
  double wy_sq_norm_;  // |wy|_F^2, the trace of the factored y gram
};

using MatrixFn = std::function<double(const Matrix&)>;
Matrix fd_gradient(const MatrixFn& f, const Matrix& at, double h);       // 2-point
Matrix fd_gradient_rich(const MatrixFn& f, const Matrix& at, double h);  // 4-point
Matrix orthonormalize(const Matrix& a);  // thin QR with positive diagonal

}  // namespace detail

}  // namespace kmargin
