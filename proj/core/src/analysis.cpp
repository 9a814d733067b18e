#include "kmargin/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "kmargin/rng.hpp"

namespace kmargin {

namespace {

double simpson(double a, double fa, double b, double fb, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_step(const std::function<double(double)>& f, double a,
                     double fa, double b, double fb, double m, double fm,
                     double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(a, fa, m, fm, flm);
  const double right = simpson(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

double normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * 2.5066282746310005);  // sqrt(2*pi)
}

}  // namespace

double adaptive_quadrature(const std::function<double(double)>& f, double lo,
                           double hi, double abs_tol) {
  if (!(hi > lo)) throw std::invalid_argument("quadrature needs hi > lo");
  if (!(abs_tol > 0.0)) throw std::invalid_argument("quadrature tol must be > 0");
  // Seed the recursion with a fixed split so narrow features near the
  // midpoint are not missed by the first Simpson estimate.
  const int pieces = 8;
  const double h = (hi - lo) / pieces;
  double total = 0.0;
  for (int i = 0; i < pieces; ++i) {
    const double a = lo + i * h, b = lo + (i + 1) * h, m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    total += adaptive_step(f, a, fa, b, fb, m, fm, simpson(a, fa, b, fb, fm),
                           abs_tol / pieces, 48);
  }
  return total;
}

void DiscreteJoint::validate() const {
  const int m = atoms();
  if (m == 0) throw std::invalid_argument("discrete joint has no atoms");
  if (p.size() != m || eta.size() != m) {
    throw std::invalid_argument("discrete joint field lengths disagree");
  }
  double sum = 0.0;
  for (int j = 0; j < m; ++j) {
    if (!(p[j] >= 0.0)) throw std::invalid_argument("negative marginal mass");
    if (!(eta[j] >= 0.0 && eta[j] <= 1.0)) {
      throw std::invalid_argument("eta entries must lie in [0,1]");
    }
    sum += p[j];
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("marginal masses must sum to 1");
  }
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      if ((support.row(i) - support.row(j)).norm() == 0.0) {
        throw std::invalid_argument("support points must be distinct");
      }
    }
  }
}

double risk(const DiscreteJoint& d, const DecisionFn& f) {
  d.validate();
  double total = 0.0;
  for (int j = 0; j < d.atoms(); ++j) {
    const double value = f(d.support.row(j).transpose());
    // sign(0) = +1, matching predict().
    total += d.p[j] * (value >= 0.0 ? 1.0 - d.eta[j] : d.eta[j]);
  }
  return total;
}

double bayes_risk(const DiscreteJoint& d) {
  d.validate();
  double total = 0.0;
  for (int j = 0; j < d.atoms(); ++j) {
    total += d.p[j] * std::min(d.eta[j], 1.0 - d.eta[j]);
  }
  return total;
}

double phi_risk(const DiscreteJoint& d, const DecisionFn& f, LossKind loss) {
  d.validate();
  double total = 0.0;
  for (int j = 0; j < d.atoms(); ++j) {
    const double value = f(d.support.row(j).transpose());
    total += d.p[j] * conditional_risk(loss, d.eta[j], value);
  }
  return total;
}

double optimal_phi_risk(const DiscreteJoint& d, LossKind loss) {
  d.validate();
  double total = 0.0;
  for (int j = 0; j < d.atoms(); ++j) {
    total += d.p[j] * optimal_conditional_risk(loss, d.eta[j]);
  }
  return total;
}

PsiBoundCheck check_psi_bound(const DiscreteJoint& d, const DecisionFn& f,
                              LossKind loss) {
  PsiBoundCheck out;
  out.excess_risk = risk(d, f) - bayes_risk(d);
  out.excess_phi_risk = phi_risk(d, f, loss) - optimal_phi_risk(d, loss);
  // Exact arithmetic keeps the excess in [0,1]; clamp rounding spill.
  out.psi_value = psi_transform(loss, std::min(std::max(out.excess_risk, 0.0), 1.0));
  out.holds = out.psi_value <= out.excess_phi_risk + 1e-9;
  return out;
}

LabeledDataset sample(const DiscreteJoint& d, int n, std::uint64_t seed) {
  d.validate();
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  std::mt19937_64 g = make_rng(seed, 0);
  LabeledDataset out;
  out.points.resize(n, d.dim());
  out.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int j = sample_index(g, d.p);
    out.points.row(i) = d.support.row(j);
    out.labels[i] = uniform_double(g) < d.eta[j] ? 1 : -1;
  }
  return out;
}

MixtureBenchmark::MixtureBenchmark(double mean_neg, double mean_pos, double sigma)
    : mean_neg_(mean_neg), mean_pos_(mean_pos), sigma_(sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("mixture sigma must be > 0");
  const double lo = std::min(mean_neg_, mean_pos_) - 12.0 * sigma_;
  const double hi = std::max(mean_neg_, mean_pos_) + 12.0 * sigma_;
  bayes_risk_ = adaptive_quadrature(
      [this](double x) {
        const double e = eta(x);
        return std::min(e, 1.0 - e) * density(x);
      },
      lo, hi, 1e-9);
}

double MixtureBenchmark::eta(double x) const {
  const double pos = normal_pdf(x, mean_pos_, sigma_);
  const double neg = normal_pdf(x, mean_neg_, sigma_);
  const double sum = pos + neg;
  if (sum <= 0.0) {
    // Far tails underflow both densities; decide by the nearer mean.
    return std::abs(x - mean_pos_) <= std::abs(x - mean_neg_) ? 1.0 : 0.0;
  }
  return pos / sum;
}

double MixtureBenchmark::density(double x) const {
  return 0.5 * normal_pdf(x, mean_pos_, sigma_) +
         0.5 * normal_pdf(x, mean_neg_, sigma_);
}

double mixture_bayes_risk(const MixtureBenchmark& b) { return b.bayes_risk(); }

LabeledDataset sample(const MixtureBenchmark& b, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  std::mt19937_64 g = make_rng(seed, 0);
  LabeledDataset out;
  out.points.resize(n, 1);
  out.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const bool positive = uniform_double(g) < 0.5;
    const double mean = positive ? b.mean_pos() : b.mean_neg();
    out.points(i, 0) = mean + b.sigma() * normal_double(g);
    out.labels[i] = positive ? 1 : -1;
  }
  return out;
}

}  // namespace kmargin
