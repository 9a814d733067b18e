#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace kmargin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Symmetric positive-definite similarity. Numeric variants operate on
// real vectors; the spectrum variant operates on strings (substring
// counts of length p).
//
// Gaussian convention: k(x,y) = exp(-||x-y||^2 / (2 sigma^2)).
class Kernel {
 public:
  enum class Type { kLinear, kPolynomial, kGaussian, kSpectrum };

  static Kernel linear();
  static Kernel polynomial(int degree, double offset);
  static Kernel gaussian(double sigma);
  static Kernel spectrum(int p);

  Type type() const { return type_; }
  int degree() const { return degree_; }
  double offset() const { return offset_; }
  double sigma() const { return sigma_; }
  int spectrum_p() const { return degree_; }
  bool is_string_kernel() const { return type_ == Type::kSpectrum; }

  double eval(const Vector& x, const Vector& y) const;
  double eval(const std::string& s, const std::string& t) const;

  // Grammar: "linear" | "poly:<degree>:<offset>" | "gauss:<sigma>" |
  // "spectrum:<p>". Used by the CLI and by model files.
  static Kernel parse(const std::string& spec);
  std::string spec() const;

 private:
  Kernel(Type t, int degree, double offset, double sigma)
      : type_(t), degree_(degree), offset_(offset), sigma_(sigma) {}

  Type type_;
  int degree_ = 0;     // polynomial degree, or p for spectrum
  double offset_ = 0;  // polynomial offset
  double sigma_ = 1;   // gaussian bandwidth
};

// Sum over length-p substrings u of count_s(u) * count_t(u). Zero when
// either string is shorter than p.
double spectrum_eval(int p, const std::string& s, const std::string& t);

// Dense n x n matrix of pairwise kernel evaluations. Rows of `points`
// are observations.
Matrix gram(const Kernel& kernel, const Matrix& points);
Matrix gram(const Kernel& kernel, const std::vector<std::string>& points);

// Cross-Gram: entries[i][j] = k(a_i, b_j), a from rows of `a`, b of `b`.
Matrix cross_gram(const Kernel& kernel, const Matrix& a, const Matrix& b);

// HGH with H = I - (1/n) 11^T. Every row and column of the result sums
// to ~0; idempotent.
Matrix center_gram(const Matrix& g);

// Greedy pivoted partial factorization K ~= L L^T.
struct LowRankFactor {
  Matrix factor;                // n x k
  std::vector<int> pivots;      // length k
  double residual_trace = 0.0;  // trace(K) - trace(L L^T)
};

// Stops when residual_trace <= tol or rank == max_rank. Pivot ties
// break to the lowest index. At most n*(k+1) kernel evaluations; pass
// eval_count to measure.
LowRankFactor incomplete_cholesky(const Kernel& kernel, const Matrix& points,
                                  double tol, int max_rank,
                                  std::size_t* eval_count = nullptr);
LowRankFactor incomplete_cholesky(const Kernel& kernel,
                                  const std::vector<std::string>& points,
                                  double tol, int max_rank,
                                  std::size_t* eval_count = nullptr);

}  // namespace kmargin
