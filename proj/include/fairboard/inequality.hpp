#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace fairboard::inequality {

inline constexpr double kFloor = 1e-6;

// Patient-level performance values for one model and outcome.
struct PerformanceDistribution {
  std::vector<double> values;
  bool shifted = false;
};

// Shifts the sample so its minimum is at least 1e-6 (additive, applied to
// every value). Throws EmptyInput / NonFiniteInput.
PerformanceDistribution prepare(std::span<const double> values);

double gini(const PerformanceDistribution& d);
double atkinson(const PerformanceDistribution& d, double epsilon = 0.5);
// cv / (cv + 1) with the population standard deviation.
double normalized_cov(const PerformanceDistribution& d);
double generalized_entropy(const PerformanceDistribution& d, double alpha = 2.0);
double hoover(const PerformanceDistribution& d);
double theil(const PerformanceDistribution& d);
// Share of the top ceil(0.1 n) values over the share of the bottom floor(0.4 n).
// Throws TooFewValues for n < 10.
double palma(const PerformanceDistribution& d);

enum class Index { Gini = 0, Atkinson, NormalizedCov, GeneralizedEntropy, Hoover, Theil, Palma };
inline constexpr std::array<Index, 7> kIndices{Index::Gini,   Index::Atkinson, Index::NormalizedCov,
                                               Index::GeneralizedEntropy, Index::Hoover, Index::Theil,
                                               Index::Palma};

std::string_view name(Index i);

// All seven indices with the default parameters (atkinson eps 0.5, GE alpha 2).
// NaN values in the input are dropped; an index that cannot be computed is NaN.
std::array<double, 7> all_indices(std::span<const double> raw_values);

}  // namespace fairboard::inequality
