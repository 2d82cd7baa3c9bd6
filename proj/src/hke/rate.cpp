#include <algorithm>
#include <cmath>

#include "hklab/hke.hpp"

namespace hklab {

namespace {

double term(const RateFunction& rf, double R, double t, double r) {
  if (rf.variant == RateVariant::phi) return R / r - t / rf.Psi(r);
  const double b2 = rf.Psi.beta2();
  return R / r - t * std::pow(R / r, b2) / rf.Psi(R);
}

double search(const RateFunction& rf, double R, double t) {
  // coarse log grid, then golden section around the best node
  const double b2 = rf.Psi.beta2();
  const double c1 = std::log(R), c2 = std::log(rf.Psi.inverse(t)),
               c3 = std::log(R) + std::log(t / rf.Psi(R)) / std::max(b2 - 1, 0.1);
  const double lo = std::min({c1, c2, c3}) - 20, hi = std::max({c1, c2, c3}) + 20;
  const int n = 2001;
  const double h = (hi - lo) / (n - 1);
  int best = 0;
  double bv = -INFINITY;
  for (int i = 0; i < n; ++i) {
    double v = term(rf, R, t, std::exp(lo + i * h));
    if (v > bv) {
      bv = v;
      best = i;
    }
  }
  double a = lo + (best - 1) * h, b = lo + (best + 1) * h;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = term(rf, R, t, std::exp(c)), fd = term(rf, R, t, std::exp(d));
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = term(rf, R, t, std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = term(rf, R, t, std::exp(d));
    }
  }
  return std::max({0.0, bv, fc, fd});
}

}  // namespace

double rate(const RateFunction& rf, double R, double t) {
  if (!(t > 0)) throw Error("rate needs t > 0");
  require(R >= 0, "rate needs R >= 0");
  if (R == 0) return 0.0;
  if (rf.closed_form()) {
    const double beta = rf.Psi.beta1(), a = rf.Psi.coefficient();
    require(beta > 1, "rate closed form needs beta > 1");
    // both variants reduce to sup_s {R s - (t/a) s^beta}
    double s = std::pow(R * a / (beta * t), 1 / (beta - 1));
    return R * s * (1 - 1 / beta);
  }
  return search(rf, R, t);
}

double rate_inverse_time(const RateFunction& rf, double R, double target) {
  if (target <= 0 || R == 0) return 0.0;
  // rate is decreasing in t: bracket then bisect in log t
  double lo = 1e-300, hi = 1.0;
  while (rate(rf, R, hi) > target) {
    hi *= 4;
    if (hi > 1e300) throw Error("rate inverse: target not reached");
  }
  lo = hi / 4;
  while (rate(rf, R, lo) <= target && lo > 1e-300) lo /= 4;
  for (int it = 0; it < 200; ++it) {
    double mid = std::sqrt(lo * hi);
    if (rate(rf, R, mid) > target)
      lo = mid;
    else
      hi = mid;
    if (hi / lo - 1 < 1e-13) break;
  }
  return hi;
}

}  // namespace hklab
