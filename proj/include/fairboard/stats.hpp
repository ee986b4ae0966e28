#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fairboard::stats {

double mean(std::span<const double> v);
// Population (1/n) variance.
double variance_population(std::span<const double> v);
// Sample (1/(n-1)) variance.
double variance_sample(std::span<const double> v);

// Percentile with linear interpolation between order statistics:
// position q/100 * (n - 1) in the sorted sample. q in [0, 100].
double percentile(std::vector<double> values, double q);
double median(std::vector<double> values);

// Standardizes to mean 0 and population sd 1. Missing (NaN) entries pass
// through untouched and do not contribute. Throws ZeroVariance / TooFewValues.
std::vector<double> zscore(std::span<const double> values);

struct FdrResult {
  std::vector<bool> significant;
  // Largest p-value declared significant; NaN when nothing is.
  double threshold;
  std::size_t n_tested;
  std::size_t n_significant;
};

// Benjamini-Hochberg step-up. NaN p-values are excluded from the family.
FdrResult bh_fdr(std::span<const double> pvalues, double alpha = 0.05);

struct GapCi {
  double gap;
  double lower;
  double upper;
};

// Difference in means (a - b) with a percentile bootstrap interval.
// Each iteration resamples both groups with replacement from its own stream
// derive_seed(seed, iteration).
GapCi bootstrap_gap_ci(std::span<const double> a, std::span<const double> b, int n_iter, std::uint64_t seed,
                       double level = 0.95);

// Standardized mean difference with the (n-1)-weighted pooled sd.
// NaN when the pooled sd is zero; throws TooFewValues when a group has n < 2.
double cohens_d(std::span<const double> a, std::span<const double> b);

// Two-sided normal p-value.
double two_sided_p(double z);

}  // namespace fairboard::stats
