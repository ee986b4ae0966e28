#include "fairboard/inequality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairboard/error.hpp"

namespace fairboard::inequality {

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "empty distribution");
  const double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (!(mu > 0.0)) throw Error(ErrorCode::ZeroMean, "distribution mean must be positive");
  return mu;
}

// Perfect equality is reported as exactly 0 rather than rounding residue.
bool is_constant(const std::vector<double>& v) {
  return !v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

PerformanceDistribution prepare(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values to prepare");
  for (double v : values)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "non-finite performance value");
  PerformanceDistribution d{std::vector<double>(values.begin(), values.end()), false};
  const double lo = *std::min_element(d.values.begin(), d.values.end());
  if (lo < kFloor) {
    const double shift = kFloor - lo;
    for (double& v : d.values) v += shift;
    d.shifted = true;
  }
  return d;
}

double gini(const PerformanceDistribution& d) {
  const double mu = mean_of(d.values);
  if (is_constant(d.values)) return 0.0;
  // Sorted form of sum_i sum_j |xi - xj| = 2 sum_i (2i - n - 1) x_(i).
  std::vector<double> x(d.values);
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
  return 2.0 * s / (2.0 * n * n * mu);
}

double atkinson(const PerformanceDistribution& d, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "Atkinson epsilon must be positive");
  const double mu = mean_of(d.values);
  if (is_constant(d.values)) return 0.0;
  const double n = static_cast<double>(d.values.size());
  if (epsilon == 1.0) {
    double logsum = 0.0;
    for (double x : d.values) logsum += std::log(x / mu);
    return 1.0 - std::exp(logsum / n);
  }
  double s = 0.0;
  for (double x : d.values) s += std::pow(x, 1.0 - epsilon);
  return 1.0 - std::pow(s / n, 1.0 / (1.0 - epsilon)) / mu;
}

double normalized_cov(const PerformanceDistribution& d) {
  const double mu = mean_of(d.values);
  if (is_constant(d.values)) return 0.0;
  double ss = 0.0;
  for (double x : d.values) ss += (x - mu) * (x - mu);
  const double cv = std::sqrt(ss / static_cast<double>(d.values.size())) / mu;
  return cv / (cv + 1.0);
}

double generalized_entropy(const PerformanceDistribution& d, double alpha) {
  if (alpha == 1.0) return theil(d);
  const double mu = mean_of(d.values);
  if (is_constant(d.values)) return 0.0;
  const double n = static_cast<double>(d.values.size());
  double s = 0.0;
  if (alpha == 0.0) {
    for (double x : d.values) s -= std::log(x / mu);
    return s / n;
  }
  for (double x : d.values) s += std::pow(x / mu, alpha) - 1.0;
  return s / (n * alpha * (alpha - 1.0));
}

double hoover(const PerformanceDistribution& d) {
  const double mu = mean_of(d.values);
  if (is_constant(d.values)) return 0.0;
  double dev = 0.0, total = 0.0;
  for (double x : d.values) {
    dev += std::fabs(x - mu);
    total += x;
  }
  return dev / (2.0 * total);
}

double theil(const PerformanceDistribution& d) {
  const double mu = mean_of(d.values);
  if (is_constant(d.values)) return 0.0;
  double s = 0.0;
  for (double x : d.values) {
    const double r = x / mu;
    s += r * std::log(r);
  }
  return s / static_cast<double>(d.values.size());
}

double palma(const PerformanceDistribution& d) {
  const std::size_t n = d.values.size();
  if (n < 10) throw Error(ErrorCode::TooFewValues, "Palma ratio needs at least 10 values");
  std::vector<double> x(d.values);
  std::sort(x.begin(), x.end());
  const auto top = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n)));
  const auto bottom = static_cast<std::size_t>(std::floor(0.4 * static_cast<double>(n)));
  const double top_sum = std::accumulate(x.end() - static_cast<std::ptrdiff_t>(top), x.end(), 0.0);
  const double bottom_sum = std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(bottom), 0.0);
  if (!(bottom_sum > 0.0)) throw Error(ErrorCode::ZeroMean, "bottom share is zero");
  return top_sum / bottom_sum;
}

std::string_view name(Index i) {
  switch (i) {
    case Index::Gini: return "gini";
    case Index::Atkinson: return "atkinson";
    case Index::NormalizedCov: return "cov";
    case Index::GeneralizedEntropy: return "ge2";
    case Index::Hoover: return "hoover";
    case Index::Theil: return "theil";
    case Index::Palma: return "palma";
  }
  return "?";
}

std::array<double, 7> all_indices(std::span<const double> raw_values) {
  std::array<double, 7> out;
  out.fill(kMissing);
  std::vector<double> present;
  for (double v : raw_values)
    if (!is_missing(v)) present.push_back(v);
  if (present.empty()) return out;
  const PerformanceDistribution d = prepare(present);
  auto guarded = [](auto&& fn) {
    try {
      return fn();
    } catch (const Error&) {
      return kMissing;
    }
  };
  out[0] = guarded([&] { return gini(d); });
  out[1] = guarded([&] { return atkinson(d, 0.5); });
  out[2] = guarded([&] { return normalized_cov(d); });
  out[3] = guarded([&] { return generalized_entropy(d, 2.0); });
  out[4] = guarded([&] { return hoover(d); });
  out[5] = guarded([&] { return theil(d); });
  out[6] = guarded([&] { return palma(d); });
  return out;
}

}  // namespace fairboard::inequality
