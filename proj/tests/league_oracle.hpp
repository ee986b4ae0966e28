#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fairboard/league.hpp"

namespace fbtest {

// Three models with two informative outcomes and one inequality cell, worked by hand:
//   WT_dice   0.9 0.8 0.7  -> 1, 0.5, 0
//   WT_hd95   2   4   3    -> 1, 0, 0.5 (lower is better)
//   perf      1   0.25 0.25
//   gini cell 0.1 0.2 0.3  -> equity 1, 0.5, 0
struct HandLeague {
  std::vector<std::string> models{"A", "B", "C"};
  std::vector<fairboard::league::OutcomeRow> means;
  std::vector<fairboard::league::InequalityRow> cells;
  std::vector<double> perf{1.0, 0.25, 0.25};
  std::vector<double> equity{1.0, 0.5, 0.0};
  std::vector<double> composite_50{1.0, 0.375, 0.125};
  std::vector<int> perf_rank{1, 2, 3};

  HandLeague() {
    using namespace fairboard;
    const double dice[3]{0.9, 0.8, 0.7}, hd[3]{2, 4, 3}, gini[3]{0.1, 0.2, 0.3};
    for (int m = 0; m < 3; ++m) {
      league::OutcomeRow r;
      r.fill(NAN);
      r[outcome_index(Compartment::WT, Metric::Dice)] = dice[m];
      r[outcome_index(Compartment::WT, Metric::Hd95)] = hd[m];
      means.push_back(r);
      league::InequalityRow c;
      c.fill(NAN);
      c[outcome_index(Compartment::WT, Metric::Dice)] = gini[m];
      cells.push_back(c);
    }
  }
};

}  // namespace fbtest
