#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "hklab/harnack.hpp"
#include "hklab/rng.hpp"
#include "hklab/util.hpp"

namespace hklab {

namespace {

double traj_sup(const Trajectory& traj) {
  double s = 0;
  for (const auto& u : traj.snapshots) s = std::max(s, u.cwiseAbs().maxCoeff());
  return s;
}

// nonnegative copy of u; tiny negatives from round-off are clipped
Vec nonneg(const Vec& u, double tol, const char* who) {
  if (u.minCoeff() < -tol) throw Error(std::string(who) + ": negative snapshot value " + std::to_string(u.minCoeff()));
  return u.cwiseMax(0.0);
}

Vec power_of(const Vec& u, double p) {
  Vec out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = std::pow(u[i], p);
  return out;
}

double mass_on(const Vec& v, const Vec& mu, const VertexSet& s) {
  double acc = 0;
  for (auto y : s) acc += v[static_cast<Eigen::Index>(y)] * mu[static_cast<Eigen::Index>(y)];
  return acc;
}

Cylinder window_cylinder(const MetricMeasureGraph& g, const EstimateSpec& s, const ScalingFunction& Psi, double sigma,
                         double delta) {
  return sigma_cylinder(g, s.x, s.a, s.r, Psi, sigma, delta, s.orientation);
}

void check_spec(const EstimateSpec& s) {
  require(s.r > 0, "cylinder radius must be positive");
  require(0 < s.sigma_p && s.sigma_p < s.sigma && s.sigma <= 1, "need 0 < sigma' < sigma <= 1");
  require(0 < s.delta_p && s.delta_p < s.delta && s.delta <= 1, "need 0 < delta' < delta <= 1");
}

// trapezoid weights of the grid times of traj restricted to [t0, t1]
std::vector<double> trapezoid_weights(const std::vector<double>& times, const std::vector<std::size_t>& idx) {
  std::vector<double> w(idx.size(), 0.0);
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    double h = times[idx[k + 1]] - times[idx[k]];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

}  // namespace

CertReport energy_estimate_check(const FormSchedule& schedule, const Trajectory& traj, const CutoffFunction& psi,
                                 double p, const ScalingFunction& Psi, const EstimateSpec& spec) {
  check_spec(spec);
  require(p != 0, "energy estimate needs p != 0");
  const auto& form = schedule.reference();
  const auto& g = form.graph();
  require(psi.values.size() == static_cast<Eigen::Index>(g.size()), "graph mismatch: cutoff from another graph");
  const Vec& mu = g.measure();
  const double sup_u = traj_sup(traj);
  const double tol = 1e-10 * std::max(1.0, sup_u);
  const bool floor = p < 1;
  const double eps = floor ? spec.eps_floor.value_or(1e-12 * sup_u) : 0.0;
  if (floor) require(eps > 0, "energy estimate with p < 1 needs a positive floor");

  Cylinder inner = window_cylinder(g, spec, Psi, spec.sigma_p, spec.delta);
  Cylinder outer = window_cylinder(g, spec, Psi, spec.sigma, spec.delta);
  if (outer.vertices.empty()) throw Error("energy estimate: delta B is empty at this mesh");

  const Vec psi2 = psi.values.cwiseProduct(psi.values);
  std::vector<double> sup_terms, grad_terms, rhs_terms;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    Vec u = nonneg(traj.snapshots[k], tol, "energy estimate");
    if (floor) u.array() += eps;
    Vec up = power_of(u, p), half = power_of(u, p / 2);
    sup_terms.push_back(psi2.cwiseProduct(up).dot(mu));
    grad_terms.push_back(weighted_energy(form, psi2, half, half));
    rhs_terms.push_back(mass_on(up, mu, outer.vertices));
  }
  double sup_term = 0;
  auto idx = window_indices(traj, inner);
  if (idx.empty()) throw Error("energy estimate: I_sigma' holds no time sample");
  for (auto k : idx) sup_term = std::max(sup_term, sup_terms[k]);
  const double grad = integrate_window(traj.times, grad_terms, inner.t0, inner.t1);
  const double rhs = integrate_window(traj.times, rhs_terms, outer.t0, outer.t1);
  const double lhs = sup_term + spec.a1 * grad;

  CertReport rep;
  rep.inequality = "energy-estimate";
  rep.family = traj.schedule_id;
  rep.values["p"] = p;
  rep.values["sup_term"] = sup_term;
  rep.values["gradient_term"] = grad;
  rep.values["lhs"] = lhs;
  rep.values["rhs_integral"] = rhs;
  rep.values["eps"] = eps;
  if (rhs <= 0) {
    rep.status = lhs > 0 ? Status::infeasible : Status::measured;
    rep.constant = lhs > 0 ? INFINITY : 0.0;
    rep.notes.push_back("u^p vanishes on the larger cylinder");
    return rep;
  }
  const double prefactor = lhs / rhs;
  const double shat = spec.sigma - spec.sigma_p, dhat = spec.delta - spec.delta_p;
  const double time_part = 2 / (shat * Psi(spec.r));
  const double shape = ((1 + spec.C2) / Psi(dhat * spec.r) + spec.C3) * std::pow(std::abs(p), Psi.beta2());
  rep.constant = prefactor;
  rep.values["prefactor"] = prefactor;
  rep.values["time_part"] = time_part;
  rep.values["implied_A"] = std::max(0.0, prefactor - time_part) / shape;
  rep.status = Status::measured;
  return rep;
}

double mve_bracket(double p, double beta2, const MveSpec& spec, const ScalingFunction& Psi) {
  const auto& b = spec.base;
  require(p != 0, "mean value estimate needs p != 0");
  require(spec.kappa > 1, "mean value estimate needs kappa > 1");
  const double dhat = b.delta - b.delta_p, shat = b.sigma - b.sigma_p;
  double factor, pref = 1;
  const double expo = (2 * spec.kappa - 1) / (spec.kappa - 1);
  if (p > 1) {
    factor = std::pow(p, beta2);
  } else if (p > 0) {
    factor = std::pow(2.0, beta2);
    pref = std::pow(4.0 / 3.0, beta2 * (2 * spec.kappa - 1) / (2 * (spec.kappa - 1)) * 4 / p);
  } else {
    factor = 1 + std::pow(-p, beta2);
  }
  double inner = (spec.A1p + spec.A2p * Psi(dhat * b.r)) * std::pow(dhat, -beta2) * factor + 1 / shat;
  return pref * std::pow(inner, expo);
}

CertReport mve_check(const MetricMeasureGraph& g, const Trajectory& traj, double p, const ScalingFunction& Psi,
                     const MveSpec& spec) {
  const auto& b = spec.base;
  check_spec(b);
  require(p != 0, "mean value estimate needs p != 0");
  const Vec& mu = g.measure();
  const double sup_u = traj_sup(traj);
  const double tol = 1e-10 * std::max(1.0, sup_u);
  const bool floor = p < 0;
  const double eps = floor ? b.eps_floor.value_or(1e-12 * sup_u) : 0.0;
  if (floor) require(eps > 0, "mean value estimate with p < 0 needs a positive floor");

  Cylinder inner = window_cylinder(g, b, Psi, b.sigma_p, b.delta_p);
  Cylinder outer = window_cylinder(g, b, Psi, b.sigma, b.delta);
  auto idx = window_indices(traj, inner);
  if (inner.vertices.empty() || idx.empty()) throw Error("mean value estimate: Q' is empty at this mesh");
  if (outer.vertices.empty()) throw Error("mean value estimate: Q is empty at this mesh");

  std::vector<double> rhs_terms;
  double sup_term = 0;
  std::size_t at_t = 0;
  VertexId at_y = 0;
  std::vector<Vec> up(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    Vec u = nonneg(traj.snapshots[k], tol, "mean value estimate");
    if (floor) u.array() += eps;
    up[k] = power_of(u, p);
    rhs_terms.push_back(mass_on(up[k], mu, outer.vertices));
  }
  for (auto k : idx)
    for (auto y : inner.vertices)
      if (up[k][static_cast<Eigen::Index>(y)] > sup_term) {
        sup_term = up[k][static_cast<Eigen::Index>(y)];
        at_t = k;
        at_y = y;
      }
  const double integral = integrate_window(traj.times, rhs_terms, outer.t0, outer.t1);
  const double VB = volume(g, b.x, b.r);
  const double bracket = mve_bracket(p, Psi.beta2(), spec, Psi);

  CertReport rep;
  rep.inequality = "mean-value-estimate";
  rep.family = traj.schedule_id;
  rep.values["p"] = p;
  rep.values["sup"] = sup_term;
  rep.values["integral"] = integral;
  rep.values["bracket"] = bracket;
  rep.values["volume"] = VB;
  rep.values["eps"] = eps;
  rep.witness = {{"t", traj.times[at_t]}, {"y", at_y}};
  if (integral <= 0) {
    rep.status = sup_term > 0 ? Status::infeasible : Status::measured;
    rep.constant = sup_term > 0 ? INFINITY : 0.0;
    rep.notes.push_back("u^p vanishes on Q");
    return rep;
  }
  rep.constant = sup_term * Psi(b.r) * VB / (bracket * integral);
  rep.status = Status::measured;
  return rep;
}

CertReport log_lemma_stat(const MetricMeasureGraph& g, const Trajectory& traj, const ScalingFunction& Psi, VertexId x,
                          double a, double r, double sigma, double delta, Orientation o,
                          std::optional<double> eps_floor, std::vector<double> lambda_grid) {
  require(r > 0 && sigma > 0 && sigma < 1 && delta > 0 && delta < 1, "log lemma needs r > 0 and sigma, delta in (0,1)");
  const Vec& mu = g.measure();
  const double sup_u = traj_sup(traj);
  const double eps = eps_floor.value_or(1e-12 * sup_u);
  require(eps >= 0, "log lemma floor must be nonnegative");
  const double tol = 1e-10 * std::max(1.0, sup_u);

  auto log_eps = [&](const Vec& u0) {
    Vec u = nonneg(u0, tol, "log lemma");
    u.array() += eps;
    if (u.minCoeff() <= 0) throw Error("log lemma: u_eps not strictly positive");
    return Vec(u.array().log());
  };

  // c from the snapshot at a (linear interpolation between grid times)
  require(a >= traj.times.front() - 1e-12 && a <= traj.times.back() + 1e-12, "log lemma: anchor outside the trajectory");
  std::size_t k1 = 0;
  while (k1 + 1 < traj.times.size() && traj.times[k1 + 1] < a) ++k1;
  Vec ua = traj.snapshots[k1];
  if (k1 + 1 < traj.times.size() && a > traj.times[k1]) {
    double th = (a - traj.times[k1]) / (traj.times[k1 + 1] - traj.times[k1]);
    ua = (1 - th) * traj.snapshots[k1] + th * traj.snapshots[k1 + 1];
  }
  auto psi = plateau_cutoff(g, x, delta * r, (1 - delta) * r / 2, true);
  const Vec psi2 = psi.values.cwiseProduct(psi.values);
  const double c = -log_eps(ua).cwiseProduct(psi2).dot(mu) / psi2.dot(mu);

  Cylinder K = sigma_cylinder(g, x, a, r, Psi, sigma, delta, o);
  auto idx = window_indices(traj, K);
  if (idx.size() < 2 || K.vertices.empty()) throw Error("log lemma: K holds fewer than two time samples or no vertex");
  auto tw = trapezoid_weights(traj.times, idx);
  const double sign = o == Orientation::plus ? -1.0 : 1.0;

  std::vector<std::pair<double, double>> samples;  // (value, space-time weight)
  double vmax = 0;
  for (std::size_t j = 0; j < idx.size(); ++j) {
    Vec lu = log_eps(traj.snapshots[idx[j]]);
    for (auto y : K.vertices) {
      double v = sign * (lu[static_cast<Eigen::Index>(y)] + c);
      samples.push_back({v, tw[j] * mu[static_cast<Eigen::Index>(y)]});
      vmax = std::max(vmax, v);
    }
  }
  const double norm = Psi(r) * volume(g, x, r);
  auto level = [&](double lam) {
    double m = 0;
    for (const auto& [v, w] : samples)
      if (v > lam) m += w;
    return m;
  };
  // exact supremum: lambda just below each attained value
  std::sort(samples.begin(), samples.end(), [](auto& l, auto& rr) { return l.first > rr.first; });
  double exact = 0, cum = 0;
  for (std::size_t i = 0; i < samples.size();) {
    double v = samples[i].first;
    while (i < samples.size() && samples[i].first == v) cum += samples[i++].second;
    if (v > 0) exact = std::max(exact, v * cum);
  }

  if (lambda_grid.empty() && vmax > 0)
    for (int k = 0; k <= 160; ++k) lambda_grid.push_back(vmax * std::pow(10.0, -k / 16.0));
  double best = 0, best_lam = 0;
  for (double lam : lambda_grid) {
    require(lam > 0, "log lemma: lambda grid must be positive");
    double v = lam * level(lam);
    if (v > best) {
      best = v;
      best_lam = lam;
    }
  }
  CertReport rep;
  rep.inequality = o == Orientation::plus ? "log-lemma-plus" : "log-lemma-minus";
  rep.family = traj.schedule_id;
  rep.constant = best / norm;
  rep.status = Status::measured;
  rep.values["c"] = c;
  rep.values["eps"] = eps;
  rep.values["exact_sup"] = exact / norm;
  rep.values["lambda_points"] = static_cast<double>(lambda_grid.size());
  rep.witness = {{"lambda", best_lam}};
  return rep;
}

std::vector<Trajectory> phi_family(const FormSchedule& schedule, VertexId x, double a, double r,
                                   const ScalingFunction& Psi, const std::vector<VertexId>& sources,
                                   const SolverConfig& cfg) {
  const auto& g = schedule.reference().graph();
  VertexSet B = ball(g, x, r);
  require(!B.empty(), "phi family: B(x,r) is empty");
  Propagator prop(schedule, cfg, B);
  auto mask = indicator_mask(g.size(), B);
  std::vector<Trajectory> out;
  for (auto y : sources) {
    require(y < g.size() && mask[y], "phi family: source outside B(x,r)");
    Vec f = Vec::Zero(static_cast<Eigen::Index>(g.size()));
    f[static_cast<Eigen::Index>(y)] = 1 / g.measure()[static_cast<Eigen::Index>(y)];
    auto tr = prop.solve(f, a, a + Psi(r));
    tr.schedule_id = schedule.id() + "/kernel(" + std::to_string(y) + ")";
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<Trajectory> random_phi_family(const FormSchedule& schedule, VertexId x, double a, double r,
                                          const ScalingFunction& Psi, std::size_t count, const SolverConfig& cfg,
                                          std::uint64_t seed) {
  const auto& g = schedule.reference().graph();
  VertexSet B = ball(g, x, r);
  require(!B.empty(), "phi family: B(x,r) is empty");
  Propagator prop(schedule, cfg);
  Rng rng(seed);
  std::vector<Trajectory> out;
  for (std::size_t i = 0; i < count; ++i) {
    Vec f = Vec::Zero(static_cast<Eigen::Index>(g.size()));
    for (auto y : B) f[static_cast<Eigen::Index>(y)] = rng.uniform();
    auto tr = prop.solve(f, a, a + Psi(r));
    tr.schedule_id = schedule.id() + "/random(" + std::to_string(i) + ")";
    out.push_back(std::move(tr));
  }
  return out;
}

namespace {
struct SupInf {
  double sup = -INFINITY, inf = INFINITY;
};

SupInf sup_inf(const Trajectory& tr, const Cylinder& lo, const Cylinder& hi) {
  SupInf s;
  for (auto k : window_indices(tr, lo))
    for (auto y : lo.vertices) s.sup = std::max(s.sup, tr.snapshots[k][static_cast<Eigen::Index>(y)]);
  for (auto k : window_indices(tr, hi))
    for (auto y : hi.vertices) s.inf = std::min(s.inf, tr.snapshots[k][static_cast<Eigen::Index>(y)]);
  return s;
}
}  // namespace

CertReport phi_estimate(const MetricMeasureGraph& g, const std::vector<Trajectory>& family, VertexId x, double a,
                        double r, const ScalingFunction& Psi, const HarnackParams& params) {
  if (family.empty()) throw Error("phi estimate: empty family");
  auto cs = make_cylinders(g, x, a, r, Psi, params);
  if (cs.minus.vertices.empty() || cs.plus.vertices.empty()) throw Error("phi estimate: delta B is empty at this mesh");
  std::optional<CylinderSet> hat;
  CertReport rep;
  rep.inequality = "phi";
  try {
    hat = make_cylinders(g, x, a, r, Psi, params, CylinderConvention::hat_sigma);
  } catch (const Error& e) {
    rep.notes.push_back(std::string("hat-sigma convention skipped: ") + e.what());
  }

  double best = 0, best_hat = 0;
  std::size_t used = 0, skipped = 0;
  std::optional<std::size_t> witness;
  json members = json::array();
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& tr = family[i];
    auto s = sup_inf(tr, cs.minus, cs.plus);
    if (!std::isfinite(s.sup) || !std::isfinite(s.inf)) throw Error("phi estimate: cylinder holds no time sample");
    json m{{"member", i}, {"id", tr.schedule_id}, {"sup_minus", s.sup}, {"inf_plus", s.inf}};
    if (!(s.inf > 0)) {
      ++skipped;
      m["skipped"] = true;
      members.push_back(m);
      continue;
    }
    ++used;
    double ratio = s.sup / s.inf;
    m["ratio"] = ratio;
    if (!witness || ratio > best) {
      best = ratio;
      witness = i;
    }
    if (hat) {
      auto h = sup_inf(tr, hat->minus, hat->plus);
      if (h.inf > 0 && std::isfinite(h.sup)) {
        m["ratio_hat"] = h.sup / h.inf;
        best_hat = std::max(best_hat, h.sup / h.inf);
      }
    }
    members.push_back(m);
  }
  rep.witness = {{"members", members}};
  rep.values["members_used"] = static_cast<double>(used);
  rep.values["members_skipped"] = static_cast<double>(skipped);
  rep.values["Q_minus_vertices"] = static_cast<double>(cs.minus.vertices.size());
  rep.values["Q_plus_vertices"] = static_cast<double>(cs.plus.vertices.size());
  if (!used) {
    rep.status = Status::infeasible;
    rep.constant = INFINITY;
    rep.notes.push_back("every member has zero infimum on Q+");
    return rep;
  }
  rep.witness["member"] = *witness;
  rep.constant = best;
  rep.values["C_PHI"] = best;
  if (hat) {
    rep.values["C_PHI_hat"] = best_hat;
    for (int i = 0; i < 4; ++i) rep.values["sigma" + std::to_string(i + 1)] = hat->sigma[static_cast<std::size_t>(i)];
  }
  rep.status = Status::measured;
  return rep;
}

CertReport holder_estimate(const MetricMeasureGraph& g, const Trajectory& traj, const ScalingFunction& Psi,
                           const HolderSpec& spec) {
  require(spec.r > 0 && spec.delta > 0 && spec.delta < 1, "holder estimate needs r > 0 and delta in (0,1)");
  Cylinder Qp;
  Qp.t0 = spec.a + Psi((1 - spec.delta) * spec.r);
  Qp.t1 = spec.a + Psi(spec.r);
  Qp.vertices = ball(g, spec.x, spec.delta * spec.r);
  Cylinder Q;
  Q.t0 = spec.a;
  Q.t1 = spec.a + Psi(spec.r);
  Q.vertices = ball(g, spec.x, spec.r);
  auto idx = window_indices(traj, Qp);
  if (idx.empty() || Qp.vertices.empty()) throw Error("holder estimate: Q' is empty at this mesh");

  double supQ = 0;
  for (auto k : window_indices(traj, Q))
    for (auto y : Q.vertices) supQ = std::max(supQ, std::abs(traj.snapshots[k][static_cast<Eigen::Index>(y)]));

  // space-time points of Q'
  std::vector<std::pair<std::size_t, VertexId>> pts;
  for (auto k : idx)
    for (auto y : Qp.vertices) pts.push_back({k, y});
  const std::size_t n = pts.size();
  const std::size_t all = n * (n - 1) / 2;

  std::vector<std::pair<double, double>> pairs;  // (rho, |du|)
  auto add = [&](std::size_t i, std::size_t j) {
    auto [ki, yi] = pts[i];
    auto [kj, yj] = pts[j];
    double rho = Psi.inverse(std::abs(traj.times[ki] - traj.times[kj])) + g.distance(yi, yj);
    if (rho <= 0) return;
    double du = std::abs(traj.snapshots[ki][static_cast<Eigen::Index>(yi)] - traj.snapshots[kj][static_cast<Eigen::Index>(yj)]);
    pairs.push_back({rho, du});
  };
  if (all <= spec.max_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) add(i, j);
  } else {
    Rng rng(spec.seed);
    for (std::size_t m = 0; m < spec.max_pairs; ++m) {
      auto i = static_cast<std::size_t>(rng.below(n)), j = static_cast<std::size_t>(rng.below(n));
      if (i != j) add(i, j);
    }
  }

  CertReport rep;
  rep.inequality = "holder";
  rep.family = traj.schedule_id;
  rep.budget = spec.budget;
  rep.values["pairs"] = static_cast<double>(pairs.size());
  rep.values["sup_Q"] = supQ;
  double max_du = 0;
  for (const auto& pr : pairs) max_du = std::max(max_du, pr.second);
  if (max_du <= 1e-14 * std::max(1.0, supQ)) {
    rep.constant = 1.0;
    rep.status = Status::measured;
    rep.values["capped"] = 1;
    rep.notes.push_back("constant trajectory: alpha >= 1 (capped)");
    return rep;
  }

  // dyadic modulus of continuity
  std::map<int, std::pair<double, double>> bins;  // floor(log2 rho) -> (max rho, max du)
  for (const auto& [rho, du] : pairs) {
    int b = static_cast<int>(std::floor(std::log2(rho)));
    auto& e = bins[b];
    e.first = std::max(e.first, rho);
    e.second = std::max(e.second, du);
  }
  std::vector<double> lx, ly;
  for (const auto& [b, e] : bins)
    if (e.second > 0) {
      lx.push_back(std::log(e.first));
      ly.push_back(std::log(e.second));
    }
  double slope = 0, r2 = 0;
  if (lx.size() >= 2) {
    auto fit = fit_line(lx, ly);
    slope = std::clamp(fit.slope, 0.0, 1.0);
    r2 = fit.r2;
  }

  // largest alpha on a 0.01 grid with C(alpha) <= budget
  auto C_of = [&](double alpha) {
    double c = 0;
    for (const auto& [rho, du] : pairs) c = std::max(c, du * std::pow(spec.r / rho, alpha) / supQ);
    return c;
  };
  double alpha = 0, c_at = C_of(0.0);
  for (int k = 100; k >= 1; --k) {
    double al = k / 100.0, c = C_of(al);
    if (c <= spec.budget) {
      alpha = al;
      c_at = c;
      break;
    }
  }
  rep.constant = alpha;
  rep.values["alpha"] = alpha;
  rep.values["C_at_alpha"] = c_at;
  rep.values["slope"] = slope;
  rep.values["r2"] = r2;
  rep.values["bins"] = static_cast<double>(lx.size());
  rep.status = alpha > 0 ? Status::measured : Status::fail;
  if (alpha == 0) rep.notes.push_back("no alpha on the grid keeps C within the budget");
  return rep;
}

}  // namespace hklab
