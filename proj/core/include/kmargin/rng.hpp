#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace kmargin {

// All randomness in the library flows from a single user-supplied 64-bit
// seed. Independent streams (per replicate, per restart, ...) are derived
// by mixing (seed, stream) through splitmix64 and feeding the result to a
// mt19937_64. Draws below avoid std::*_distribution so sequences do not
// depend on the standard library implementation.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(~stream)));
}

// Uniform on [0,1) with 53 random bits.
inline double uniform_double(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller; two uniforms consumed per draw, no
// cached second value, so stream positions stay call-count determined.
inline double normal_double(std::mt19937_64& g) {
  const double u1 = 1.0 - uniform_double(g);  // (0,1]
  const double u2 = uniform_double(g);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.14159265358979323846 * u2);
}

// Index draw from a finite pmf (assumed normalized) by inverse cdf.
inline int sample_index(std::mt19937_64& g, const Eigen::VectorXd& p) {
  const double r = uniform_double(g);
  double cum = 0.0;
  for (int j = 0; j < p.size(); ++j) {
    cum += p[j];
    if (r < cum) return j;
  }
  return static_cast<int>(p.size()) - 1;
}

// Fisher-Yates shuffle of 0..n-1.
inline std::vector<int> random_permutation(int n, std::mt19937_64& g) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(g() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace kmargin
