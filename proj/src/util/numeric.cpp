#include <cmath>
#include <limits>

#include "hklab/util.hpp"

namespace hklab {

LpResult solve_covering_lp(const Mat& A, const Vec& b, const Vec& c) {
  const Eigen::Index m = A.rows(), k = A.cols();
  require(b.size() == m && c.size() == k, "lp: dimension mismatch");
  for (Eigen::Index j = 0; j < k; ++j) require(c[j] > 0, "lp: objective weights must be positive");

  // Row scaling does not change the primal feasible set.
  Mat As = A;
  Vec bs = b;
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = std::max(As.row(i).cwiseAbs().maxCoeff(), std::abs(bs[i]));
    if (s > 0) {
      As.row(i) /= s;
      bs[i] /= s;
    }
  }

  // Tableau rows = dual constraints (k), columns = y (m) then slacks (k) then rhs.
  const Eigen::Index ncol = m + k;
  Mat T = Mat::Zero(k, ncol + 1);
  T.leftCols(m) = As.transpose();
  T.block(0, m, k, k).setIdentity();
  T.col(ncol) = c;
  Vec obj = Vec::Zero(ncol + 1);
  obj.head(m) = -bs;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) basis[static_cast<std::size_t>(j)] = m + j;

  const double tol = 1e-12;
  LpResult res;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index v = 0; v < ncol; ++v)
      if (obj[v] < -tol) {
        enter = v;
        break;
      }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < k; ++r) {
      if (T(r, enter) <= tol) continue;
      double ratio = T(r, ncol) / T(r, enter);
      if (ratio < best - tol ||
          (ratio <= best + tol && leave >= 0 && basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave < 0) {
      res.feasible = false;
      if (enter < m) res.infeasible_row = static_cast<std::size_t>(enter);
      return res;
    }
    T.row(leave) /= T(leave, enter);
    for (Eigen::Index r = 0; r < k; ++r)
      if (r != leave && T(r, enter) != 0.0) T.row(r) -= T(r, enter) * T.row(leave);
    obj -= obj[enter] * T.row(leave).transpose();
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  res.feasible = true;
  res.x = obj.segment(m, k).cwiseMax(0.0);
  res.objective = c.dot(res.x);
  return res;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), "fit_line: size mismatch");
  LinearFit f;
  f.n = x.size();
  if (f.n < 2) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(f.n);
  my /= static_cast<double>(f.n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

}  // namespace hklab
