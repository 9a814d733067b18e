#include "kmargin/kmethods.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kmargin/rng.hpp"

namespace kmargin {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_gram_pair(const Matrix& g1, const Matrix& g2, double kappa) {
  if (g1.rows() < 2) throw std::invalid_argument("kernel cca needs n >= 2");
  if (g1.rows() != g2.rows()) {
    throw std::invalid_argument("kernel cca inputs have mismatched lengths");
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be > 0");
  if (!g1.allFinite() || !g2.allFinite()) {
    throw std::invalid_argument("kernel cca gram has non-finite entries");
  }
}

// Top singular value of A1 P A2 P' by power iteration on M'M, where P is
// the permutation matrix sending e_j to e_{perm[j]}. All matvecs are
// dense n^2 products plus O(n) index shuffles.
double permuted_rho(const Matrix& a1, const Matrix& a2,
                    const std::vector<int>& perm) {
  const int n = static_cast<int>(a1.rows());
  std::mt19937_64 g = make_rng(0x6b6d6172ULL, 7);  // fixed internal stream
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal_double(g);
  v.normalize();

  auto scatter = [&perm, n](const Vector& z) {  // P' z
    Vector out(n);
    for (int j = 0; j < n; ++j) out[perm[j]] = z[j];
    return out;
  };
  auto gather = [&perm, n](const Vector& z) {  // P z
    Vector out(n);
    for (int i = 0; i < n; ++i) out[i] = z[perm[i]];
    return out;
  };

  double sigma = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vector w = a1 * gather(a2 * scatter(v));  // M v
    const double estimate = w.norm();
    if (estimate <= 0.0) return 0.0;
    Vector u = gather(a2.transpose() * scatter(a1.transpose() * w));  // M' w
    const double un = u.norm();
    if (un <= 0.0) return estimate;
    v = u / un;
    if (it >= 10 && std::abs(estimate - sigma) <= 1e-11 * std::max(1.0, estimate)) {
      return estimate;
    }
    sigma = estimate;
  }
  return sigma;
}

bool is_identity(const std::vector<int>& perm) {
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] != static_cast<int>(i)) return false;
  }
  return true;
}

}  // namespace

CcaResult kernel_cca_from_grams(const Matrix& g1, const Matrix& g2,
                                double kappa) {
  check_gram_pair(g1, g2, kappa);
  const int n = static_cast<int>(g1.rows());
  const Matrix k1 = center_gram(g1);
  const Matrix k2 = center_gram(g2);
  const double shift = n * kappa / 2.0;
  Matrix r1 = k1 + shift * Matrix::Identity(n, n);
  Matrix r2 = k2 + shift * Matrix::Identity(n, n);
  const auto llt1 = r1.llt();
  const auto llt2 = r2.llt();
  if (llt1.info() != Eigen::Success || llt2.info() != Eigen::Success) {
    throw std::runtime_error("kernel cca regularized gram is not positive definite");
  }

  // M = R1^{-1} K1 K2 R2^{-1}; right inverse applied through symmetry.
  Matrix m = llt1.solve(k1 * k2);
  m = llt2.solve(m.transpose()).transpose();

  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  CcaResult out;
  out.rho_raw = svd.singularValues()[0];
  out.rho = std::min(std::max(out.rho_raw, 0.0), 1.0);
  out.a = llt1.solve(svd.matrixU().col(0));
  out.b = llt2.solve(svd.matrixV().col(0));
  out.kappa = kappa;
  return out;
}

CcaResult kernel_cca(const Matrix& x1s, const Matrix& x2s, const Kernel& k1,
                     const Kernel& k2, double kappa) {
  if (x1s.rows() != x2s.rows()) {
    throw std::invalid_argument("kernel cca inputs have mismatched lengths");
  }
  return kernel_cca_from_grams(gram(k1, x1s), gram(k2, x2s), kappa);
}

CcaResult kernel_cca(const std::vector<std::string>& x1s,
                     const std::vector<std::string>& x2s, const Kernel& k1,
                     const Kernel& k2, double kappa) {
  if (x1s.size() != x2s.size()) {
    throw std::invalid_argument("kernel cca inputs have mismatched lengths");
  }
  return kernel_cca_from_grams(gram(k1, x1s), gram(k2, x2s), kappa);
}

IndependenceResult independence_test(const Matrix& x1s, const Matrix& x2s,
                                     const Kernel& k1, const Kernel& k2,
                                     double kappa, int permutations,
                                     std::uint64_t seed) {
  if (permutations < 19) {
    throw std::invalid_argument("independence test needs >= 19 permutations");
  }
  if (x1s.rows() != x2s.rows()) {
    throw std::invalid_argument("independence test inputs have mismatched lengths");
  }
  const Matrix g1 = gram(k1, x1s);
  const Matrix g2 = gram(k2, x2s);
  check_gram_pair(g1, g2, kappa);

  const int n = static_cast<int>(g1.rows());
  const Matrix k1c = center_gram(g1);
  const Matrix k2c = center_gram(g2);
  const double shift = n * kappa / 2.0;
  Matrix r1 = k1c + shift * Matrix::Identity(n, n);
  Matrix r2 = k2c + shift * Matrix::Identity(n, n);
  // a1 = R1^{-1} K1~, a2 = K2~ R2^{-1}; permuting x2 turns the statistic
  // into sigma_max(a1 P a2 P'), so the grams factor out of the loop.
  const Matrix a1 = r1.llt().solve(k1c);
  const Matrix a2 = r2.llt().solve(k2c).transpose();

  std::vector<int> identity(n);
  for (int i = 0; i < n; ++i) identity[i] = i;

  IndependenceResult out;
  out.rho = permuted_rho(a1, a2, identity);
  out.null_rhos.resize(permutations);
  int at_least = 0;
  for (int b = 0; b < permutations; ++b) {
    std::mt19937_64 g = make_rng(seed, static_cast<std::uint64_t>(b));
    // The identity shuffle is excluded (it reproduces the observed
    // statistic, carrying no evidence about the null).
    std::vector<int> perm = random_permutation(n, g);
    while (is_identity(perm)) perm = random_permutation(n, g);
    out.null_rhos[b] = permuted_rho(a1, a2, perm);
    if (out.null_rhos[b] >= out.rho) ++at_least;
  }
  out.p_value = (1.0 + at_least) / (permutations + 1.0);
  return out;
}

double kdr_objective(const Matrix& b, const Matrix& xs, const Matrix& ys,
                     const Kernel& kx, const Kernel& ky, double epsilon) {
  const Matrix dev = b.transpose() * b - Matrix::Identity(b.cols(), b.cols());
  if (dev.cwiseAbs().maxCoeff() > 1e-8) {
    throw std::invalid_argument("kdr objective requires orthonormal columns");
  }
  return detail::kdr_objective_raw(b, xs, ys, kx, ky, epsilon);
}

double principal_angle_degrees(const Matrix& b1, const Matrix& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols()) {
    throw std::invalid_argument("principal angle needs equal-shape frames");
  }
  const Matrix q1 = detail::orthonormalize(b1);
  const Matrix q2 = detail::orthonormalize(b2);
  Eigen::BDCSVD<Matrix> svd(q1.transpose() * q2);
  const double smin = svd.singularValues().minCoeff();
  return std::acos(std::min(std::max(smin, 0.0), 1.0)) * 180.0 / kPi;
}

SdrResult estimate_sdr(const Matrix& xs, const Matrix& ys, int m,
                       const Kernel& kx, const Kernel& ky, double epsilon,
                       int restarts, std::uint64_t seed) {
  const int n = static_cast<int>(xs.rows());
  const int d = static_cast<int>(xs.cols());
  if (m < 1 || m > d) throw std::invalid_argument("target dimension out of range");
  if (n < m + 1) throw std::invalid_argument("too few samples for target dimension");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  bool degenerate = true;
  for (int i = 1; i < n && degenerate; ++i) {
    if ((xs.row(i) - xs.row(0)).norm() > 0.0) degenerate = false;
  }
  if (degenerate) throw std::invalid_argument("all inputs identical; no direction to recover");

  detail::KdrFastEval eval(xs, ys, kx, ky, epsilon);
  detail::MatrixFn obj = [&eval](const Matrix& b) { return eval.objective(b); };

  Matrix best_b;
  double best_f = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 g = make_rng(seed, static_cast<std::uint64_t>(r));
    Matrix b(d, m);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < m; ++j) b(i, j) = normal_double(g);
    }
    b = detail::orthonormalize(b);
    double f = obj(b);

    for (int iter = 0; iter < 200; ++iter) {
      const Matrix grad = detail::fd_gradient(obj, b, 1e-5);
      if (grad.norm() < 1e-9) break;
      double step = 1.0;
      bool accepted = false;
      Matrix candidate;
      double candidate_f = 0.0;
      for (int bt = 0; bt < 40; ++bt) {
        candidate = detail::orthonormalize(b - step * grad);
        candidate_f = obj(candidate);
        if (candidate_f < f - 1e-12 * std::abs(f)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) break;
      b = candidate;
      f = candidate_f;
    }
    if (f < best_f) {
      best_f = f;
      best_b = b;
    }
  }

  SdrResult out;
  out.b = best_b;
  // Report the exact dense objective at the chosen frame, not the
  // low-rank surrogate the descent optimized.
  out.objective = kdr_objective(best_b, xs, ys, kx, ky, epsilon);
  out.restarts_used = restarts;
  return out;
}

namespace detail {

Matrix orthonormalize(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix r = qr.matrixQR().topRows(a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

double kdr_objective_raw(const Matrix& b, const Matrix& xs, const Matrix& ys,
                         const Kernel& kx, const Kernel& ky, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (b.rows() != xs.cols()) {
    throw std::invalid_argument("projection rows must match point dimension");
  }
  if (xs.rows() != ys.rows()) {
    throw std::invalid_argument("x/y sample counts disagree");
  }
  const int n = static_cast<int>(xs.rows());
  const Matrix gx = center_gram(gram(kx, Matrix(xs * b)));
  const Matrix gy = center_gram(gram(ky, ys));
  Matrix a = gx + (n * epsilon) * Matrix::Identity(n, n);
  return a.llt().solve(gy).trace();
}

KdrFastEval::KdrFastEval(const Matrix& xs, const Matrix& ys, const Kernel& kx,
                         const Kernel& ky, double epsilon)
    : xs_(xs), kx_(kx) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (xs.rows() != ys.rows()) {
    throw std::invalid_argument("x/y sample counts disagree");
  }
  const int n = static_cast<int>(xs.rows());
  shift_ = n * epsilon;

  double trace_y = 0.0;
  for (int i = 0; i < n; ++i) {
    trace_y += ky.eval(ys.row(i).transpose(), ys.row(i).transpose());
  }
  const LowRankFactor fy =
      incomplete_cholesky(ky, ys, 1e-9 * std::max(trace_y, 1e-300), 160);
  wy_ = fy.factor.rowwise() - fy.factor.colwise().mean();
  wy_sq_norm_ = wy_.squaredNorm();
}

double KdrFastEval::objective(const Matrix& b) const {
  const Matrix z = xs_ * b;
  const int n = static_cast<int>(z.rows());
  double trace_x = 0.0;
  for (int i = 0; i < n; ++i) {
    trace_x += kx_.eval(z.row(i).transpose(), z.row(i).transpose());
  }
  const LowRankFactor fx =
      incomplete_cholesky(kx_, z, 1e-9 * std::max(trace_x, 1e-300), 160);
  const Matrix v = fx.factor.rowwise() - fx.factor.colwise().mean();

  // Woodbury: (VV' + sI)^{-1} = (1/s)(I - V (sI + V'V)^{-1} V'), so
  // tr[WW' (VV'+sI)^{-1}] = (|W|_F^2 - tr[M' C^{-1} M]) / s, M = V'W.
  const int k = static_cast<int>(v.cols());
  const Matrix c =
      shift_ * Matrix::Identity(k, k) + v.transpose() * v;
  const Matrix m = v.transpose() * wy_;
  const double reduced = c.llt().solve(m).cwiseProduct(m).sum();
  return (wy_sq_norm_ - reduced) / shift_;
}

Matrix fd_gradient(const MatrixFn& f, const Matrix& at, double h) {
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (int i = 0; i < at.rows(); ++i) {
    for (int j = 0; j < at.cols(); ++j) {
      probe(i, j) = at(i, j) + h;
      const double up = f(probe);
      probe(i, j) = at(i, j) - h;
      const double down = f(probe);
      probe(i, j) = at(i, j);
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

Matrix fd_gradient_rich(const MatrixFn& f, const Matrix& at, double h) {
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (int i = 0; i < at.rows(); ++i) {
    for (int j = 0; j < at.cols(); ++j) {
      const double base = at(i, j);
      probe(i, j) = base + 2.0 * h;
      const double p2 = f(probe);
      probe(i, j) = base + h;
      const double p1 = f(probe);
      probe(i, j) = base - h;
      const double m1 = f(probe);
      probe(i, j) = base - 2.0 * h;
      const double m2 = f(probe);
      probe(i, j) = base;
      grad(i, j) = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    }
  }
  return grad;
}

}  // namespace detail

}  // namespace kmargin
