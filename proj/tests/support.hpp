#pragma once

#include <Eigen/Dense>
#include <random>

#include "fdlink/types.hpp"

namespace testing {

inline fdlink::CVec gaussian(std::size_t n, std::uint64_t seed, double variance = 1.0) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.0, std::sqrt(variance / 2.0));
  fdlink::CVec x(n);
  for (auto& v : x) {
    const double re = d(g);
    v = {re, d(g)};
  }
  return x;
}

inline fdlink::CVec qpsk(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  fdlink::CVec x(n);
  for (auto& v : x) v = {(g() & 1) ? 1.0 : -1.0, (g() & 2) ? 1.0 : -1.0};
  return x;
}

inline double rel_err(const fdlink::CVec& a, const fdlink::CVec& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

// Direct time-varying convolution y(i) = sum_l h(i, l) x(i - l).
template <typename Channel>
fdlink::CVec convolve(const fdlink::CVec& x, const Channel& h) {
  fdlink::CVec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t l = 0; l < h.length() && l <= i; ++l) y[i] += h.at(i, l) * x[i - l];
  }
  return y;
}

}  // namespace testing
