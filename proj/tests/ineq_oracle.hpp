#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace fbtest::ineq {

inline double mean(const std::vector<double>& x) {
  long double s = 0;
  for (double v : x) s += v;
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

// Mean absolute difference over all ordered pairs.
inline double gini(const std::vector<double>& x) {
  long double s = 0;
  for (double a : x)
    for (double b : x) s += std::fabs(a - b);
  const double n = static_cast<double>(x.size());
  return static_cast<double>(s / (2.0L * n * n * mean(x)));
}

inline double atkinson(const std::vector<double>& x, double eps) {
  const double mu = mean(x);
  long double s = 0;
  if (eps == 1.0) {
    for (double v : x) s += std::log(v);
    return 1.0 - std::exp(static_cast<double>(s / x.size())) / mu;
  }
  for (double v : x) s += std::pow(v / mu, 1.0 - eps);
  return 1.0 - std::pow(static_cast<double>(s / x.size()), 1.0 / (1.0 - eps));
}

inline double normalized_cov(const std::vector<double>& x) {
  const double mu = mean(x);
  long double ss = 0;
  for (double v : x) ss += (v - mu) * (v - mu);
  const double cv = std::sqrt(static_cast<double>(ss / x.size())) / mu;
  return cv / (1.0 + cv);
}

inline double ge(const std::vector<double>& x, double alpha) {
  const double mu = mean(x);
  long double s = 0;
  for (double v : x) s += std::pow(v / mu, alpha);
  return static_cast<double>((s / x.size() - 1.0L) / (alpha * (alpha - 1.0)));
}

inline double hoover(const std::vector<double>& x) {
  const double mu = mean(x);
  long double s = 0;
  for (double v : x) s += std::fabs(v / mu - 1.0);
  return static_cast<double>(s / (2.0L * x.size()));
}

inline double theil(const std::vector<double>& x) {
  const double mu = mean(x);
  long double s = 0;
  for (double v : x) s += (v / mu) * std::log(v / mu);
  return static_cast<double>(s / x.size());
}

// Selection-based Palma: repeatedly extract extremes rather than sorting.
inline double palma(std::vector<double> x) {
  const std::size_t n = x.size();
  const std::size_t top = (n + 9) / 10;
  const std::size_t bottom = (4 * n) / 10;
  long double hi = 0, lo = 0;
  std::vector<double> y = x;
  for (std::size_t k = 0; k < top; ++k) {
    auto it = std::max_element(y.begin(), y.end());
    hi += *it;
    y.erase(it);
  }
  y = x;
  for (std::size_t k = 0; k < bottom; ++k) {
    auto it = std::min_element(y.begin(), y.end());
    lo += *it;
    y.erase(it);
  }
  return static_cast<double>(hi / lo);
}

inline double rel_err(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace fbtest::ineq
