#pragma once

#include <optional>
#include <vector>

#include "hklab/core.hpp"

namespace hklab {

// min c^T x  s.t.  A x >= b,  x >= 0, with c > 0. Solved through the dual
// max b^T y s.t. A^T y <= c, y >= 0, whose slack basis is feasible from the start.
struct LpResult {
  bool feasible = false;
  Vec x;
  double objective = 0.0;
  std::optional<std::size_t> infeasible_row;
};

LpResult solve_covering_lp(const Mat& A, const Vec& b, const Vec& c);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hklab
