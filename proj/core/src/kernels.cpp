#include "kmargin/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <unordered_map>

namespace kmargin {

Kernel Kernel::linear() { return Kernel(Type::kLinear, 0, 0.0, 1.0); }

Kernel Kernel::polynomial(int degree, double offset) {
  if (degree < 1) throw std::invalid_argument("polynomial kernel: degree must be positive");
  if (offset < 0) throw std::invalid_argument("polynomial kernel: offset must be nonnegative");
  return Kernel(Type::kPolynomial, degree, offset, 1.0);
}

Kernel Kernel::gaussian(double sigma) {
  if (!(sigma > 0)) throw std::invalid_argument("gaussian kernel: sigma must be positive");
  return Kernel(Type::kGaussian, 0, 0.0, sigma);
}

Kernel Kernel::spectrum(int p) {
  if (p < 1) throw std::invalid_argument("spectrum kernel: p must be positive");
  return Kernel(Type::kSpectrum, p, 0.0, 1.0);
}

double Kernel::eval(const Vector& x, const Vector& y) const {
  if (type_ == Type::kSpectrum)
    throw std::invalid_argument("spectrum kernel requires string inputs");
  if (x.size() != y.size())
    throw std::invalid_argument("kernel eval: dimension mismatch");
  switch (type_) {
    case Type::kLinear:
      return x.dot(y);
    case Type::kPolynomial:
      return std::pow(x.dot(y) + offset_, degree_);
    case Type::kGaussian:
      return std::exp(-(x - y).squaredNorm() / (2.0 * sigma_ * sigma_));
    default:
      throw std::logic_error("unreachable kernel type");
  }
}

double Kernel::eval(const std::string& s, const std::string& t) const {
  if (type_ != Type::kSpectrum)
    throw std::invalid_argument("string inputs require the spectrum kernel");
  return spectrum_eval(degree_, s, t);
}

double spectrum_eval(int p, const std::string& s, const std::string& t) {
  if (p < 1) throw std::invalid_argument("spectrum_eval: p must be positive");
  const auto up = static_cast<std::size_t>(p);
  if (s.size() < up || t.size() < up) return 0.0;
  std::unordered_map<std::string_view, double> counts;
  std::string_view sv(s);
  for (std::size_t i = 0; i + up <= sv.size(); ++i) counts[sv.substr(i, up)] += 1.0;
  double total = 0.0;
  std::string_view tv(t);
  for (std::size_t i = 0; i + up <= tv.size(); ++i) {
    auto it = counts.find(tv.substr(i, up));
    if (it != counts.end()) total += it->second;
  }
  return total;
}

namespace {

// Shared by the vector and string entry points: n points addressed by
// index through `k`.
Matrix gram_indexed(int n, const std::function<double(int, int)>& k) {
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = k(i, j);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

LowRankFactor icl_indexed(int n, const std::function<double(int, int)>& k,
                          double tol, int max_rank, std::size_t* eval_count) {
  if (n < 1) throw std::invalid_argument("incomplete_cholesky: empty input");
  if (max_rank < 1) throw std::invalid_argument("incomplete_cholesky: max_rank must be positive");
  std::size_t evals = 0;
  Vector diag(n);
  for (int i = 0; i < n; ++i) {
    diag[i] = k(i, i);
    ++evals;
  }
  const int cap = std::min(max_rank, n);
  Matrix factor = Matrix::Zero(n, cap);
  std::vector<int> pivots;
  double residual = diag.sum();

  int rank = 0;
  while (rank < cap && residual > tol) {
    int piv = 0;
    double best = diag[0];
    for (int i = 1; i < n; ++i) {
      if (diag[i] > best) {  // ties keep the lowest index
        best = diag[i];
        piv = i;
      }
    }
    if (best <= 0.0) break;  // round-off exhausted the residual
    const double root = std::sqrt(best);
    for (int i = 0; i < n; ++i) {
      double v = k(i, piv);
      ++evals;
      if (rank > 0) v -= factor.row(i).head(rank).dot(factor.row(piv).head(rank));
      factor(i, rank) = v / root;
    }
    factor(piv, rank) = root;
    for (int i = 0; i < n; ++i) diag[i] -= factor(i, rank) * factor(i, rank);
    diag[piv] = 0.0;
    pivots.push_back(piv);
    ++rank;
    residual = diag.sum();
  }

  LowRankFactor out;
  out.factor = factor.leftCols(rank);
  out.pivots = std::move(pivots);
  out.residual_trace = std::max(residual, 0.0);
  if (eval_count) *eval_count = evals;
  return out;
}

void check_uniform_rows(const Matrix& points) {
  if (points.rows() < 1) throw std::invalid_argument("gram: empty point list");
}

}  // namespace

Matrix gram(const Kernel& kernel, const Matrix& points) {
  check_uniform_rows(points);
  if (kernel.is_string_kernel())
    throw std::invalid_argument("spectrum kernel requires string inputs");
  const int n = static_cast<int>(points.rows());
  return gram_indexed(n, [&](int i, int j) {
    return kernel.eval(points.row(i).transpose(), points.row(j).transpose());
  });
}

Matrix gram(const Kernel& kernel, const std::vector<std::string>& points) {
  if (points.empty()) throw std::invalid_argument("gram: empty point list");
  if (!kernel.is_string_kernel())
    throw std::invalid_argument("string inputs require the spectrum kernel");
  const int n = static_cast<int>(points.size());
  return gram_indexed(n, [&](int i, int j) { return kernel.eval(points[i], points[j]); });
}

Matrix cross_gram(const Kernel& kernel, const Matrix& a, const Matrix& b) {
  if (a.rows() < 1 || b.rows() < 1) throw std::invalid_argument("cross_gram: empty point list");
  Matrix g(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      g(i, j) = kernel.eval(a.row(i).transpose(), b.row(j).transpose());
  return g;
}

Matrix center_gram(const Matrix& g) {
  if (g.rows() != g.cols() || g.rows() < 1)
    throw std::invalid_argument("center_gram: square nonempty matrix required");
  Vector row_mean = g.rowwise().mean();
  Vector col_mean = g.colwise().mean();
  const double total_mean = g.mean();
  Matrix centered = g;
  centered.colwise() -= row_mean;
  centered.rowwise() -= col_mean.transpose();
  centered.array() += total_mean;
  return centered;
}

LowRankFactor incomplete_cholesky(const Kernel& kernel, const Matrix& points,
                                  double tol, int max_rank, std::size_t* eval_count) {
  check_uniform_rows(points);
  if (kernel.is_string_kernel())
    throw std::invalid_argument("spectrum kernel requires string inputs");
  const int n = static_cast<int>(points.rows());
  return icl_indexed(
      n,
      [&](int i, int j) {
        return kernel.eval(points.row(i).transpose(), points.row(j).transpose());
      },
      tol, max_rank, eval_count);
}

LowRankFactor incomplete_cholesky(const Kernel& kernel,
                                  const std::vector<std::string>& points,
                                  double tol, int max_rank, std::size_t* eval_count) {
  if (points.empty()) throw std::invalid_argument("incomplete_cholesky: empty input");
  if (!kernel.is_string_kernel())
    throw std::invalid_argument("string inputs require the spectrum kernel");
  const int n = static_cast<int>(points.size());
  return icl_indexed(
      n, [&](int i, int j) { return kernel.eval(points[i], points[j]); }, tol,
      max_rank, eval_count);
}

Kernel Kernel::parse(const std::string& spec) {
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
      auto pos = s.find(':', start);
      if (pos == std::string::npos) {
        parts.push_back(s.substr(start));
        break;
      }
      parts.push_back(s.substr(start, pos - start));
      start = pos + 1;
    }
    return parts;
  };
  auto to_double = [&spec](const std::string& s) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad kernel spec: " + spec);
    }
    if (used != s.size()) throw std::invalid_argument("bad kernel spec: " + spec);
    return v;
  };
  auto to_int = [&](const std::string& s) {
    double v = to_double(s);
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw std::invalid_argument("bad kernel spec: " + spec);
    return i;
  };

  const auto parts = split(spec);
  if (parts[0] == "linear" && parts.size() == 1) return linear();
  if (parts[0] == "poly" && parts.size() == 3)
    return polynomial(to_int(parts[1]), to_double(parts[2]));
  if (parts[0] == "gauss" && parts.size() == 2) return gaussian(to_double(parts[1]));
  if (parts[0] == "spectrum" && parts.size() == 2) return spectrum(to_int(parts[1]));
  throw std::invalid_argument("bad kernel spec: " + spec);
}

std::string Kernel::spec() const {
  char buf[64];
  switch (type_) {
    case Type::kLinear:
      return "linear";
    case Type::kPolynomial:
      std::snprintf(buf, sizeof(buf), "poly:%d:%.17g", degree_, offset_);
      return buf;
    case Type::kGaussian:
      std::snprintf(buf, sizeof(buf), "gauss:%.17g", sigma_);
      return buf;
    case Type::kSpectrum:
      std::snprintf(buf, sizeof(buf), "spectrum:%d", degree_);
      return buf;
  }
  return "linear";
}

}  // namespace kmargin
