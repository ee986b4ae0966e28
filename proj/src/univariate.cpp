#include "fairboard/univariate.hpp"

#include <cmath>
#include <map>

#include "fairboard/error.hpp"
#include "fairboard/metrics_table.hpp"
#include "fairboard/rng.hpp"
#include "fairboard/stats.hpp"

namespace fairboard::univariate {

namespace {

std::optional<bool> equals_either(const std::string& v, const std::string& a, const std::string& b) {
  if (v == a) return true;
  if (v == b) return false;
  return std::nullopt;
}

}  // namespace

const std::vector<BinaryFactor>& binary_factors() {
  static const std::vector<BinaryFactor> factors{
      {"sex", "M", "F", [](const CohortRow& r) { return equals_either(r.sex, "M", "F"); }},
      {"source", "UPENN-GBM", "UCSF-PDGM",
       [](const CohortRow& r) { return equals_either(r.source, "UPENN-GBM", "UCSF-PDGM"); }},
      {"grade", "4", "non-4",
       [](const CohortRow& r) -> std::optional<bool> {
         if (!r.who_grade) return std::nullopt;
         return *r.who_grade == 4;
       }},
      {"resection", "GTR", "STR", [](const CohortRow& r) { return equals_either(r.resection, "GTR", "STR"); }},
      {"diagnosis", "GBM", "Non-GBM",
       [](const CohortRow& r) -> std::optional<bool> {
         const auto cls = diagnosis_class(r);
         if (!cls) return std::nullopt;
         if (*cls == "GBM") return true;
         if (diagnosis_is_idh_mutant(r)) return false;
         return std::nullopt;
       }},
  };
  return factors;
}

const std::vector<AgeBin>& age_bins() {
  static const std::vector<AgeBin> bins{{"<30", -INFINITY, 30},  {"30-39", 30, 40}, {"40-49", 40, 50},
                                        {"50-59", 50, 60},       {"60-69", 60, 70}, {"70-79", 70, 80},
                                        {"80+", 80, INFINITY}};
  return bins;
}

UnivariateResult run_univariate(const std::vector<MetricRecord>& records, const std::vector<CohortRow>& cohort,
                                const std::vector<std::size_t>& outcomes, int n_iter, std::uint64_t seed,
                                bool exclude_oedema_only) {
  std::map<std::string, const CohortRow*> by_id;
  for (const auto& r : cohort) by_id[r.patient_id] = &r;
  const auto models = model_ids(records);
  const auto& factors = binary_factors();

  UnivariateResult out;
  for (std::size_t m = 0; m < models.size(); ++m) {
    std::vector<const MetricRecord*> recs;
    for (const auto& r : records)
      if (r.model_id == models[m] && !(exclude_oedema_only && r.gt_oedema_only) && by_id.count(r.patient_id))
        recs.push_back(&r);

    for (std::size_t f = 0; f < factors.size(); ++f) {
      for (std::size_t o : outcomes) {
        std::vector<double> a, b;
        for (const auto* r : recs) {
          const double v = r->values[o];
          if (!std::isfinite(v)) continue;
          const auto g = factors[f].group_of(*by_id.at(r->patient_id));
          if (!g) continue;
          (*g ? a : b).push_back(v);
        }
        GapRow row{models[m], factors[f].name, outcome_name(o), factors[f].level_a, factors[f].level_b,
                   a.size(),  b.size(),        kMissing,        kMissing,           kMissing,
                   kMissing,  kMissing};
        if (!a.empty() && !b.empty()) {
          const std::uint64_t stream = (m * factors.size() + f) * kOutcomeCount + o;
          const auto ci = stats::bootstrap_gap_ci(a, b, n_iter, derive_seed(seed, stream));
          row.mean_a = stats::mean(a);
          row.mean_b = stats::mean(b);
          row.gap = ci.gap;
          row.lower = ci.lower;
          row.upper = ci.upper;
        }
        out.gaps.push_back(row);
      }
    }

    for (std::size_t o : outcomes) {
      for (const auto& bin : age_bins()) {
        std::vector<double> v;
        for (const auto* r : recs) {
          const auto& age = by_id.at(r->patient_id)->age_years;
          if (!age || !std::isfinite(r->values[o])) continue;
          if (*age >= bin.lower && *age < bin.upper) v.push_back(r->values[o]);
        }
        out.age_bins.push_back({models[m], outcome_name(o), bin.label, v.size(), v.empty() ? kMissing : stats::mean(v)});
      }
    }
  }
  return out;
}

CsvTable UnivariateResult::gap_table() const {
  CsvTable t;
  t.header = {"model_id", "factor", "outcome", "level_a", "level_b", "n_a", "n_b",
              "mean_a",   "mean_b", "gap",     "ci_lower", "ci_upper"};
  for (const auto& g : gaps)
    t.rows.push_back({g.model_id, g.factor, g.outcome, g.level_a, g.level_b, std::to_string(g.n_a),
                      std::to_string(g.n_b), format_number(g.mean_a), format_number(g.mean_b), format_number(g.gap),
                      format_number(g.lower), format_number(g.upper)});
  return t;
}

CsvTable UnivariateResult::age_bin_table() const {
  CsvTable t;
  t.header = {"model_id", "outcome", "age_bin", "n", "mean"};
  for (const auto& a : age_bins)
    t.rows.push_back({a.model_id, a.outcome, a.bin, std::to_string(a.n), format_number(a.mean)});
  return t;
}

}  // namespace fairboard::univariate
