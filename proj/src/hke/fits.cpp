#include <algorithm>
#include <cmath>

#include "hklab/hke.hpp"
#include "hklab/util.hpp"

namespace hklab {

namespace {

Vec normalized_indicator(const MetricMeasureGraph& g, const VertexSet& s) {
  Vec f = Vec::Zero(static_cast<Eigen::Index>(g.size()));
  for (auto y : s) f[static_cast<Eigen::Index>(y)] = 1;
  return f / std::sqrt(set_mass(g, s));
}

double l2(const Vec& f, const Vec& mu) { return std::sqrt(f.cwiseProduct(f).dot(mu)); }

VertexSet support(const Vec& f) {
  VertexSet s;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    if (f[i] != 0) s.push_back(static_cast<VertexId>(i));
  return s;
}

// smallest C' >= 0 with C(C') <= goal for a nonincreasing C(.)
template <class F>
std::optional<double> smallest_param(F C, double goal, double cap = 1e12) {
  if (C(0.0) <= goal) return 0.0;
  double hi = 1e-6;
  while (C(hi) > goal) {
    hi *= 2;
    if (hi > cap) return std::nullopt;
  }
  double lo = hi / 2;
  if (hi == 1e-6) lo = 0;
  for (int it = 0; it < 100 && hi - lo > 1e-10 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    if (C(mid) > goal)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

double clip_for(const MetricMeasureGraph& g, VertexId x, const KernelMatrix& k, std::optional<double> clip) {
  if (clip) return *clip;
  if (k.domain) return distance_to_complement(g, x, *k.domain);
  return g.radius();
}

}  // namespace

CertReport davies_gaffney_check(const FormSchedule& schedule, VertexId x, VertexId y, double s,
                                const SolverConfig& cfg, const ScalingFunction& Psi, const DaviesSpec& spec) {
  const auto& g = schedule.reference().graph();
  const Vec& mu = g.measure();
  const double d = g.distance(x, y);
  require(d > 0, "davies-gaffney needs d(x,y) > 0");
  VertexSet b1 = ball(g, x, d / 4), b2 = ball(g, y, d / 4);
  Vec f1 = spec.f1 ? *spec.f1 : normalized_indicator(g, b1);
  Vec f2 = spec.f2 ? *spec.f2 : normalized_indicator(g, b2);
  VertexSet s1 = support(f1), s2 = support(f2);
  auto m1 = indicator_mask(g.size(), b1), m2 = indicator_mask(g.size(), b2);
  for (auto v : s1) require(m1[v], "davies-gaffney: f1 not supported in B(x, d/4)");
  for (auto v : s2) require(m2[v], "davies-gaffney: f2 not supported in B(y, d/4)");
  for (auto v : b1)
    if (m2[v]) throw Error("davies-gaffney: support balls overlap (d too small at this mesh)");
  double d_eff = INFINITY;
  for (auto a : s1)
    for (auto b : s2) d_eff = std::min(d_eff, g.distance(a, b));

  const double T = spec.horizon > 0 ? spec.horizon : 4 * Psi(d);
  auto traj = solve_ivp(schedule, f1, s, s + T, cfg);
  const double norm = l2(f1, mu) * l2(f2, mu);
  RateFunction rf{Psi, RateVariant::phi_beta, false};

  double Cp = 0, binding = 0;
  std::size_t zero = 0;
  std::vector<double> rx, ry;
  CertReport rep;
  rep.inequality = "davies-gaffney";
  rep.family = schedule.id();
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    const double tau = traj.times[k] - s;
    const double lhs = traj.snapshots[k].cwiseProduct(f2).dot(mu);
    if (lhs <= 0) {
      ++zero;
      continue;
    }
    // need Phi_b2(d, C' tau) >= target
    const double target = std::log(norm / lhs) + spec.alpha_minus_c * tau;
    double need = 0;
    if (target < 0) {
      rep.status = Status::infeasible;
      rep.constant = INFINITY;
      rep.witness = {{"t_minus_s", tau}, {"lhs", lhs}, {"bound_limit", norm * std::exp(spec.alpha_minus_c * tau)}};
      rep.notes.push_back("bilinear term exceeds the contraction limit; no C' works");
      return rep;
    }
    if (target > 0) need = rate_inverse_time(rf, d, target) / tau;
    if (need > Cp) {
      Cp = need;
      binding = tau;
    }
    if (lhs > 1e-300) {
      // slope diagnostic only in the tail regime, where the Gaussian factor dominates the prefactor
      double xval = d_eff * d_eff / tau;
      if (d_eff * d_eff / (4 * tau) >= 1 && d_eff * d_eff / (4 * tau) <= 16) {
        rx.push_back(xval);
        ry.push_back(std::log(lhs / norm));
      }
    }
  }
  rep.constant = Cp;
  rep.status = Status::measured;
  rep.values["C_prime"] = Cp;
  rep.values["d"] = d;
  rep.values["d_support"] = d_eff;
  rep.values["nonpositive_points"] = static_cast<double>(zero);
  rep.values["grid_points"] = static_cast<double>(traj.times.size() - 1);
  if (rx.size() >= 2) {
    auto fit = fit_line(rx, ry);
    rep.values["decay_slope"] = fit.slope;
    rep.values["decay_r2"] = fit.r2;
  }
  rep.witness = {{"t_minus_s", binding}};
  return rep;
}

CertReport upper_hke_fit(const MetricMeasureGraph& g, const std::vector<KernelMatrix>& kernels,
                         const ScalingFunction& Psi, const UpperFitSpec& spec) {
  if (kernels.empty()) throw Error("upper fit: empty fit set");
  struct Pt {
    double d, tau, pvv, shift;  // pvv = p V^{1/2} V^{1/2}, shift = (alpha - c) tau
    double t, x, y;
  };
  std::vector<Pt> pts;
  std::size_t tiny = 0, nonpos = 0;
  for (const auto& k : kernels) {
    require(k.p.rows() == static_cast<Eigen::Index>(g.size()), "graph mismatch: kernel from another graph");
    const double tau = k.t - k.s;
    require(tau > 0, "upper fit needs t > s");
    const double base = Psi.inverse(tau / 2);
    VertexSet dom;
    if (k.domain) dom = *k.domain;
    else
      for (VertexId v = 0; v < g.size(); ++v) dom.push_back(v);
    std::vector<double> vol(g.size(), 0.0);
    for (auto v : dom) vol[v] = volume(g, v, std::min(base, clip_for(g, v, k, spec.clip_radius)));
    for (auto x : dom)
      for (auto y : dom) {
        double p = k.p(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
        if (p <= 0) {
          ++nonpos;
          continue;
        }
        if (p < 1e-300) ++tiny;
        pts.push_back({g.distance(x, y), tau, p * std::sqrt(vol[x] * vol[y]), spec.alpha_minus_c * tau, k.t,
                       static_cast<double>(x), static_cast<double>(y)});
      }
  }
  if (pts.empty()) throw Error("upper fit: no positive kernel entry");
  RateFunction rf{Psi, RateVariant::phi_beta, false};
  auto C_of = [&](double Cp) {
    double c = 0;
    for (const auto& q : pts) {
      double ph = (q.d > 0 && Cp > 0) ? rate(rf, q.d, Cp * q.tau) : (q.d > 0 ? INFINITY : 0.0);
      c = std::max(c, q.pvv * std::exp(ph - q.shift));
    }
    return c;
  };
  double c_inf = 0, c_diag = 0;
  const Pt* diag_w = nullptr;
  for (const auto& q : pts) {
    c_inf = std::max(c_inf, q.pvv * std::exp(-q.shift));
    if (q.d == 0 && q.pvv * std::exp(-q.shift) >= c_diag) {
      c_diag = q.pvv * std::exp(-q.shift);
      diag_w = &q;
    }
  }
  auto Cp = smallest_param([&](double c) { return C_of(c); }, 2 * c_inf);

  CertReport rep;
  rep.inequality = "upper-hke";
  rep.values["C_inf"] = c_inf;
  rep.values["C_diag"] = c_diag;
  rep.values["points"] = static_cast<double>(pts.size());
  rep.values["below_1e-300"] = static_cast<double>(tiny);
  rep.values["nonpositive"] = static_cast<double>(nonpos);
  if (diag_w) rep.witness["diag"] = {{"t", diag_w->t}, {"t_minus_s", diag_w->tau}, {"x", diag_w->x}};
  if (!Cp) {
    rep.status = Status::infeasible;
    rep.constant = INFINITY;
    rep.notes.push_back("no C' up to 1e12 brings C within 2 C(infinity)");
    return rep;
  }
  rep.constant = C_of(*Cp);
  rep.values["C"] = rep.constant;
  rep.values["C_prime"] = *Cp;
  rep.status = Status::measured;

  // decay diagnostic: log(p V^{1/2} V^{1/2}) against Phi_b2(d, t - s)
  std::vector<double> fx, fy;
  for (const auto& q : pts) {
    if (q.d == 0 || q.pvv < 1e-300) continue;
    double ph = rate(rf, q.d, q.tau);
    if (ph >= spec.slope_lo && ph <= spec.slope_hi) {
      fx.push_back(ph);
      fy.push_back(std::log(q.pvv));
    }
  }
  if (fx.size() >= 2) {
    auto fit = fit_line(fx, fy);
    rep.values["decay_slope"] = fit.slope;
    rep.values["decay_r2"] = fit.r2;
    rep.values["decay_points"] = static_cast<double>(fx.size());
  }
  return rep;
}

LowerFit lower_hke_fit(const MetricMeasureGraph& g, const std::vector<KernelMatrix>& kernels,
                       const ScalingFunction& Psi, const LowerFitSpec& spec) {
  if (kernels.empty()) throw Error("lower fit: empty fit set");
  require(spec.radius > 0 && spec.eps > 0 && spec.eps < 1, "lower fit needs a positive radius and eps in (0,1)");
  const VertexSet B = ball(g, spec.center, spec.radius);
  const VertexSet inner = ball(g, spec.center, (1 - spec.eps) * spec.radius);
  const VertexSet half = ball(g, spec.center, spec.radius / 2);
  require(!inner.empty(), "lower fit: inner ball empty");
  LowerFit out;
  out.near.inequality = "lower-hke-near-diagonal";
  out.off.inequality = "lower-hke-off-diagonal";

  double c_near = INFINITY;
  std::size_t used = 0, nonpos = 0;
  json w;
  for (const auto& k : kernels) {
    require(k.p.rows() == static_cast<Eigen::Index>(g.size()), "graph mismatch: kernel from another graph");
    const double tau = k.t - k.s;
    if (!(tau > 0) || spec.eps * tau > Psi(spec.radius)) continue;
    const double rr = Psi.inverse(tau);
    for (auto x : inner) {
      const double Rx = distance_to_complement(g, x, B);
      const double V = volume(g, x, std::min(rr, Rx));
      for (auto y : inner) {
        if (g.distance(x, y) > spec.eps * rr) continue;
        double p = k.p(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
        ++used;
        if (p <= 0) {
          ++nonpos;
          continue;
        }
        if (p * V < c_near) {
          c_near = p * V;
          w = {{"t_minus_s", tau}, {"x", x}, {"y", y}};
        }
      }
    }
  }
  if (!used) throw Error("lower fit: empty near-diagonal set");
  out.near.values["points"] = static_cast<double>(used);
  out.near.witness = w;
  if (nonpos) {
    out.near.status = Status::fail;
    out.near.constant = 0;
    out.near.notes.push_back("nonpositive kernel entries in the fit region; see check_positivity");
  } else {
    out.near.status = Status::measured;
    out.near.constant = c_near;
  }
  out.near.values["c_prime"] = out.near.constant;

  if (!g.geodesic()) {
    out.off.status = Status::not_applicable;
    out.off.notes.push_back("metric not geodesic: chained lower bound not applicable");
    return out;
  }
  // c'' = 1; C'' smallest with c'(C'') >= c_near / 2
  RateFunction rf{Psi, RateVariant::phi, false};
  struct Pt {
    double pv, ph;
  };
  std::vector<Pt> pts;
  for (const auto& k : kernels) {
    const double tau = k.t - k.s;
    if (!(tau > 0)) continue;
    const double rr = std::min(Psi.inverse(tau / 2), spec.radius);
    for (auto x : half) {
      const double V = volume(g, x, rr);
      for (auto y : half) {
        double p = k.p(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
        if (p <= 0) {
          pts.push_back({0.0, 0.0});
          continue;
        }
        pts.push_back({p * V, rate(rf, g.distance(x, y), tau)});
      }
    }
  }
  auto c_of = [&](double Cpp) {
    double c = INFINITY;
    for (const auto& q : pts) c = std::min(c, q.pv * std::exp(Cpp * q.ph));
    return c;
  };
  const double goal = out.near.constant / 2;
  out.off.values["c_double_prime"] = 1.0;
  if (!(goal > 0)) {
    out.off.status = Status::infeasible;
    out.off.notes.push_back("near-diagonal constant is not positive");
    return out;
  }
  // c_of is nondecreasing in C''; bisect on the decreasing function -c_of
  auto Cpp = smallest_param([&](double c) { return -c_of(c); }, -goal, 1e6);
  if (!Cpp) {
    out.off.status = Status::infeasible;
    out.off.constant = INFINITY;
    out.off.notes.push_back("no C'' up to 1e6 keeps c' above half the near-diagonal value");
    return out;
  }
  out.off.status = Status::measured;
  out.off.constant = c_of(*Cpp);
  out.off.values["c_prime"] = out.off.constant;
  out.off.values["C_double_prime"] = *Cpp;
  out.off.values["points"] = static_cast<double>(pts.size());
  return out;
}

}  // namespace hklab
