#include "fairboard/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairboard/error.hpp"
#include "fairboard/rng.hpp"

namespace fairboard::stats {

double mean(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::EmptyInput, "mean of empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_population(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

double variance_sample(std::span<const double> v) {
  if (v.size() < 2) throw Error(ErrorCode::TooFewValues, "sample variance needs n >= 2");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return values[lo];
  return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return percentile(std::move(values), 50.0); }

std::vector<double> zscore(std::span<const double> values) {
  std::vector<double> present;
  for (double v : values)
    if (!is_missing(v)) present.push_back(v);
  if (present.size() < 2) throw Error(ErrorCode::TooFewValues, "z-scoring needs at least two values");
  const double m = mean(present);
  const double sd = std::sqrt(variance_population(present));
  if (!(sd > 0.0) || sd <= 1e-14 * std::max(1.0, std::fabs(m)))
    throw Error(ErrorCode::ZeroVariance, "cannot z-score a constant variable");
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out)
    if (!is_missing(v)) v = (v - m) / sd;
  return out;
}

FdrResult bh_fdr(std::span<const double> pvalues, double alpha) {
  FdrResult r{std::vector<bool>(pvalues.size(), false), kMissing, 0, 0};
  std::vector<std::size_t> order;
  order.reserve(pvalues.size());
  for (std::size_t i = 0; i < pvalues.size(); ++i)
    if (!is_missing(pvalues[i])) order.push_back(i);
  r.n_tested = order.size();
  if (order.empty()) return r;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  const double m = static_cast<double>(order.size());
  std::size_t cut = 0;
  for (std::size_t k = order.size(); k >= 1; --k) {
    if (pvalues[order[k - 1]] <= static_cast<double>(k) * alpha / m) {
      cut = k;
      break;
    }
  }
  if (cut == 0) return r;
  r.threshold = pvalues[order[cut - 1]];
  for (std::size_t i : order)
    if (pvalues[i] <= r.threshold) {
      r.significant[i] = true;
      ++r.n_significant;
    }
  return r;
}

GapCi bootstrap_gap_ci(std::span<const double> a, std::span<const double> b, int n_iter, std::uint64_t seed,
                       double level) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyGroup, "bootstrap needs both groups nonempty");
  if (n_iter < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap needs n_iter >= 1");
  GapCi out{mean(a) - mean(b), 0.0, 0.0};
  std::vector<double> gaps(static_cast<std::size_t>(n_iter));
  for (int it = 0; it < n_iter; ++it) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(it)));
    double sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sa += a[rng.index(a.size())];
    for (std::size_t i = 0; i < b.size(); ++i) sb += b[rng.index(b.size())];
    gaps[static_cast<std::size_t>(it)] = sa / static_cast<double>(a.size()) - sb / static_cast<double>(b.size());
  }
  const double tail = (1.0 - level) / 2.0 * 100.0;
  out.lower = percentile(gaps, tail);
  out.upper = percentile(std::move(gaps), 100.0 - tail);
  return out;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::TooFewValues, "Cohen's d needs n >= 2 per group");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double pooled = ((na - 1.0) * variance_sample(a) + (nb - 1.0) * variance_sample(b)) / (na + nb - 2.0);
  if (!(pooled > 0.0)) return kMissing;
  return (mean(a) - mean(b)) / std::sqrt(pooled);
}

double two_sided_p(double z) {
  if (is_missing(z)) return kMissing;
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

}  // namespace fairboard::stats
