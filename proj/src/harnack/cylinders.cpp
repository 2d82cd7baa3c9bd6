#include <algorithm>
#include <cmath>
#include <sstream>

#include "hklab/harnack.hpp"

namespace hklab {

namespace {
double parse_fraction(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}
}  // namespace

std::array<double, 4> HarnackParams::parse_tau(const std::string& text) {
  std::array<double, 4> out{};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 4) throw Error("tau needs exactly four values");
    out[i++] = parse_fraction(item);
  }
  if (i != 4) throw Error("tau needs exactly four values");
  return out;
}

void HarnackParams::validate() const {
  if (!(0 < tau[0] && tau[0] < tau[1] && tau[1] < tau[2] && tau[2] < tau[3] && tau[3] <= 1))
    throw Error("cylinder parameters need 0 < tau1 < tau2 < tau3 < tau4 <= 1");
  if (!(delta > 0 && delta <= 1)) throw Error("cylinder parameters need 0 < delta <= 1");
}

std::array<double, 4> hat_sigma(const HarnackParams& p, const ScalingFunction& Psi) {
  p.validate();
  const double C = Psi.c_psi(), b1 = Psi.beta1(), b2 = Psi.beta2();
  double lb1 = std::pow(C * p.tau[0], 1 / b2);
  double ub2 = std::pow(p.tau[1] / C, 1 / b1);
  double lb3 = std::pow(C * p.tau[2], 1 / b2);
  double ub4 = std::min(1.0, std::pow(p.tau[3] / C, 1 / b1));
  if (!(lb1 < ub2 && ub2 < lb3 && lb3 < ub4))
    throw Error("hat-sigma conversion impossible: tau too close for the given beta1, beta2, C_Psi");
  return {lb1 + 0.25 * (ub2 - lb1), ub2 - 0.25 * (ub2 - lb1), lb3 + 0.25 * (ub4 - lb3), ub4 - 0.25 * (ub4 - lb3)};
}

namespace {
Cylinder cyl(const MetricMeasureGraph& g, VertexId x, double t0, double t1, double radius) {
  Cylinder c;
  c.t0 = t0;
  c.t1 = t1;
  c.center = x;
  c.radius = radius;
  c.vertices = ball(g, x, radius);
  return c;
}

void check_grid(const Cylinder& c, double dt, const char* name) {
  if (dt <= 0) return;
  double k = std::ceil(c.t0 / dt - 1e-9);
  if (k * dt > c.t1 + 1e-9 * dt)
    throw Error(std::string("cylinder ") + name + " holds no time grid point (window shorter than dt)");
}
}  // namespace

CylinderSet make_cylinders(const MetricMeasureGraph& g, VertexId x, double a, double r, const ScalingFunction& Psi,
                           const HarnackParams& params, CylinderConvention conv, double dt) {
  params.validate();
  require(r > 0, "cylinder radius must be positive");
  CylinderSet cs;
  cs.convention = conv;
  const double P = Psi(r), dr = params.delta * r;
  cs.Q = cyl(g, x, a, a + P, r);
  if (conv == CylinderConvention::tau) {
    cs.minus = cyl(g, x, a + params.tau[0] * P, a + params.tau[1] * P, dr);
    cs.plus = cyl(g, x, a + params.tau[2] * P, a + params.tau[3] * P, dr);
  } else {
    cs.sigma = hat_sigma(params, Psi);
    cs.minus = cyl(g, x, a + Psi(cs.sigma[0] * r), a + Psi(cs.sigma[1] * r), dr);
    cs.plus = cyl(g, x, a + Psi(cs.sigma[2] * r), a + Psi(cs.sigma[3] * r), dr);
  }
  check_grid(cs.minus, dt, "Q-");
  check_grid(cs.plus, dt, "Q+");
  return cs;
}

Cylinder sigma_cylinder(const MetricMeasureGraph& g, VertexId x, double a, double r, const ScalingFunction& Psi,
                        double sigma, double delta, Orientation o) {
  require(sigma > 0 && sigma <= 1 && delta > 0 && delta <= 1, "sigma and delta must lie in (0,1]");
  const double P = Psi(r);
  return o == Orientation::minus ? cyl(g, x, a - sigma * P, a, delta * r) : cyl(g, x, a, a + sigma * P, delta * r);
}

std::vector<std::size_t> window_indices(const Trajectory& traj, const Cylinder& c) {
  std::vector<std::size_t> out;
  const double snap = 1e-9 * std::max(1.0, std::abs(c.t1 - c.t0));
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    if (traj.times[k] >= c.t0 - snap && traj.times[k] <= c.t1 + snap) out.push_back(k);
  return out;
}

double integrate_window(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1) {
  require(times.size() == values.size() && times.size() >= 2, "integrate_window: need matching samples");
  const double snap = 1e-9 * std::max(1.0, std::abs(t1 - t0));
  if (t0 < times.front() - snap || t1 > times.back() + snap)
    throw Error("integrate_window: window outside the trajectory span");
  t0 = std::max(t0, times.front());
  t1 = std::min(t1, times.back());
  double acc = 0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    double a = times[k], b = times[k + 1];
    double lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi <= lo) continue;
    auto at = [&](double t) { return values[k] + (values[k + 1] - values[k]) * (t - a) / (b - a); };
    acc += 0.5 * (hi - lo) * (at(lo) + at(hi));
  }
  return acc;
}

std::vector<double> bombieri_schedule(double sigma_star, int n) {
  require(sigma_star > 0 && sigma_star < 1 && n >= 0, "bombieri schedule needs sigma* in (0,1), n >= 0");
  std::vector<double> out;
  for (int j = 0; j <= n; ++j) out.push_back(1 - (1 - sigma_star) / (1 + j));
  return out;
}

}  // namespace hklab
