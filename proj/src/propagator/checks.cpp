#include <algorithm>
#include <cmath>

#include "hklab/propagator.hpp"
#include "hklab/rng.hpp"

namespace hklab {

CertReport check_chapman_kolmogorov(const KernelMatrix& k_sr, const KernelMatrix& k_rt, const KernelMatrix& k_st,
                                    const Vec& mu) {
  require(k_sr.schedule_id == k_rt.schedule_id && k_rt.schedule_id == k_st.schedule_id,
          "chapman-kolmogorov: kernels from different schedules");
  require(std::abs(k_sr.t - k_rt.s) <= 1e-12 * std::max(1.0, std::abs(k_rt.s)) && std::abs(k_sr.s - k_st.s) <= 1e-12 * std::max(1.0, std::abs(k_st.s)) &&
              std::abs(k_rt.t - k_st.t) <= 1e-12 * std::max(1.0, std::abs(k_st.t)),
          "chapman-kolmogorov: times do not chain");
  CertReport rep;
  rep.inequality = "chapman-kolmogorov";
  rep.family = "kernel";
  rep.provenance = "mu-weighted matrix product";
  Mat prod = k_rt.p * mu.asDiagonal() * k_sr.p;
  double scale = std::max(k_st.p.cwiseAbs().maxCoeff(), 1e-300);
  double defect = (prod - k_st.p).cwiseAbs().maxCoeff() / scale;
  rep.constant = defect;
  rep.values["defect"] = defect;
  // aligned when the direct grid contains r and equals the union of the two grids
  std::vector<double> u = k_sr.grid;
  u.insert(u.end(), k_rt.grid.begin() + 1, k_rt.grid.end());
  bool aligned = u.size() == k_st.grid.size();
  for (std::size_t i = 0; aligned && i < u.size(); ++i)
    if (std::abs(u[i] - k_st.grid[i]) > 1e-12 * std::max(1.0, std::abs(u[i]))) aligned = false;
  rep.values["aligned"] = aligned ? 1.0 : 0.0;
  if (!aligned) rep.notes.push_back("grids misaligned: defect reflects discretization, not algebra");
  rep.budget = 1e-10;
  rep.status = aligned ? (defect <= 1e-10 ? Status::pass : Status::fail) : Status::measured;
  return rep;
}

CertReport check_positivity(const KernelMatrix& k, std::optional<bool> m_matrix, double tol) {
  CertReport rep;
  rep.inequality = "positivity";
  rep.family = "kernel";
  rep.provenance = "entry scan";
  VertexSet dom = k.domain ? *k.domain : VertexSet{};
  if (!k.domain)
    for (Eigen::Index i = 0; i < k.p.rows(); ++i) dom.push_back(static_cast<VertexId>(i));
  double mn = INFINITY, mx = 0;
  for (auto y : dom)
    for (auto x : dom) {
      double v = k.p(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
      if (v < mn) {
        mn = v;
        rep.witness = {{"y", y}, {"x", x}};
      }
      mx = std::max(mx, std::abs(v));
    }
  rep.constant = mn;
  rep.values["min_entry"] = mn;
  rep.values["max_entry"] = mx;
  rep.values["strictly_positive"] = mn > 0 ? 1.0 : 0.0;
  if (m_matrix) rep.values["m_matrix"] = *m_matrix ? 1.0 : 0.0;
  rep.budget = -tol;
  rep.status = mn >= -tol * std::max(1.0, mx) ? Status::pass : Status::fail;
  return rep;
}

Trajectory steklov_average(const Trajectory& traj, double h) {
  require(traj.times.size() >= 2, "steklov average: trajectory too short");
  require(h > 0, "steklov average: h must be positive");
  if (h > traj.span() * (1 + 1e-12)) throw Error("steklov average: h longer than the trajectory");
  const auto& T = traj.times;
  // integral of the interpolant from T[0] to tau
  auto integral_to = [&](double tau) {
    Vec acc = Vec::Zero(traj.snapshots[0].size());
    for (std::size_t k = 0; k + 1 < T.size(); ++k) {
      double a = T[k], b = T[k + 1];
      if (tau <= a) break;
      double e = std::min(b, tau);
      double lam = (e - a) / (b - a);
      // int_a^e of linear interpolation between u_k and u_{k+1}
      acc += (e - a) * ((1 - lam / 2) * traj.snapshots[k] + (lam / 2) * traj.snapshots[k + 1]);
    }
    return acc;
  };
  Trajectory out;
  out.schedule_id = traj.schedule_id;
  const double end = T.back();
  const double snap = 1e-12 * std::max(1.0, std::abs(end));
  for (std::size_t k = 0; k < T.size(); ++k) {
    if (T[k] + h > end + snap) break;
    out.times.push_back(T[k]);
    out.snapshots.push_back((integral_to(std::min(T[k] + h, end)) - integral_to(T[k])) / h);
  }
  out.initial = out.snapshots.front();
  return out;
}

std::vector<Vec> step_residuals(const FormSchedule& schedule, const Trajectory& traj, const VertexSet& U, double theta) {
  const Vec& mu = schedule.reference().graph().measure();
  std::vector<Vec> out;
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    double a = traj.times[k], b = traj.times[k + 1];
    const Mat& B = schedule.form_matrix_at(0.5 * (a + b));
    Vec mid = theta * traj.snapshots[k + 1] + (1 - theta) * traj.snapshots[k];
    Vec full = mu.cwiseProduct(traj.snapshots[k + 1] - traj.snapshots[k]) + (b - a) * (B * mid);
    Vec r(static_cast<Eigen::Index>(U.size()));
    for (std::size_t i = 0; i < U.size(); ++i) r[static_cast<Eigen::Index>(i)] = full[static_cast<Eigen::Index>(U[i])];
    out.push_back(r);
  }
  return out;
}

namespace {
double data_scale(const Trajectory& traj) {
  double s = 0;
  for (const auto& u : traj.snapshots) s = std::max(s, u.cwiseAbs().maxCoeff());
  return std::max(s, 1e-300);
}
}  // namespace

CertReport check_max_principle(const FormSchedule& schedule, const Trajectory& traj, const VertexSet& U,
                               const SolverConfig& cfg, double tol) {
  CertReport rep;
  rep.inequality = "max-principle";
  rep.family = "trajectory";
  rep.provenance = "grid scan";
  const double scale = data_scale(traj);
  auto inU = indicator_mask(schedule.reference().size(), U);
  double init_pos = 0, outside = 0;
  for (std::size_t x = 0; x < inU.size(); ++x) {
    double v = traj.snapshots.front()[static_cast<Eigen::Index>(x)];
    if (inU[x]) init_pos = std::max(init_pos, v);
  }
  for (const auto& u : traj.snapshots)
    for (std::size_t x = 0; x < inU.size(); ++x)
      if (!inU[x]) outside = std::max(outside, u[static_cast<Eigen::Index>(x)]);
  rep.values["initial_positive_part"] = init_pos;
  rep.values["outside_max"] = outside;
  double defect = 0;
  for (const auto& r : step_residuals(schedule, traj, U, cfg.effective_theta())) defect = std::max(defect, r.maxCoeff());
  rep.values["subsolution_defect"] = defect / scale;
  if (init_pos > tol * scale || outside > tol * scale) {
    rep.status = Status::not_applicable;
    rep.notes.push_back(init_pos > tol * scale ? "hypothesis violated: u+(s) does not vanish on U"
                                              : "hypothesis violated: u > 0 outside U");
    return rep;
  }
  double mx = -INFINITY;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
    for (auto x : U) {
      double v = traj.snapshots[k][static_cast<Eigen::Index>(x)];
      if (v > mx) {
        mx = v;
        rep.witness = {{"t", traj.times[k]}, {"x", x}};
      }
    }
  rep.constant = mx;
  rep.budget = tol;
  rep.status = mx <= tol * std::max(1.0, scale) ? Status::pass : Status::fail;
  return rep;
}

CertReport check_super_mean_value(const FormSchedule& schedule, const Trajectory& traj, const VertexSet& U,
                                  const SolverConfig& cfg, double tol) {
  CertReport rep;
  rep.inequality = "super-mean-value";
  rep.family = "trajectory";
  rep.provenance = "comparison with the Dirichlet evolution on U";
  Propagator P(schedule, cfg, U);
  const Vec& f = traj.snapshots.front();
  if (f.minCoeff() < -tol * data_scale(traj)) {
    rep.status = Status::not_applicable;
    rep.notes.push_back("initial datum is not nonnegative");
    return rep;
  }
  const double s = traj.times.front();
  double worst = INFINITY;
  Vec fu = Vec::Zero(f.size());
  for (auto x : U) fu[static_cast<Eigen::Index>(x)] = f[static_cast<Eigen::Index>(x)];
  auto dirichlet = P.solve(fu, s, traj.times.back());
  const bool same_grid = dirichlet.times == traj.times;
  for (std::size_t k = 1; k < traj.times.size(); ++k) {
    Vec v = same_grid ? dirichlet.snapshots[k] : Vec(P.transition(s, traj.times[k]) * fu);
    for (auto x : U) {
      double d = traj.snapshots[k][static_cast<Eigen::Index>(x)] - v[static_cast<Eigen::Index>(x)];
      if (d < worst) {
        worst = d;
        rep.witness = {{"t", traj.times[k]}, {"x", x}};
      }
    }
  }
  const double scale = data_scale(traj);
  rep.constant = worst / scale;
  rep.values["min_difference"] = worst;
  rep.budget = -tol;
  rep.status = worst >= -tol * scale ? Status::pass : Status::fail;
  return rep;
}

CertReport check_caloric_axioms(const FormSchedule& schedule, const VertexSet& U, double s, double T,
                                const SolverConfig& cfg, std::uint64_t seed, double tol) {
  require(!U.empty() && s < T, "caloric axioms: need nonempty U and s < T");
  CertReport rep;
  rep.inequality = "caloric-axioms";
  rep.family = "seeded samples";
  rep.provenance = "discrete solution predicate";
  const auto& g = schedule.reference().graph();
  const auto n = static_cast<Eigen::Index>(g.size());
  const double th = cfg.effective_theta();
  Rng rng(seed);
  auto random_on = [&](const VertexSet& S, bool nonneg) {
    Vec f = Vec::Zero(n);
    for (auto x : S) f[static_cast<Eigen::Index>(x)] = nonneg ? rng.uniform() : rng.uniform(-1, 1);
    return f;
  };
  auto max_abs_residual = [&](const Trajectory& tr, const VertexSet& S) {
    double m = 0, scale = data_scale(tr);
    for (const auto& r : step_residuals(schedule, tr, S, th)) m = std::max(m, r.cwiseAbs().maxCoeff());
    return m / scale;
  };
  Propagator P(schedule, cfg, U);
  Vec f1 = random_on(U, false), f2 = random_on(U, false);
  auto u1 = P.solve(f1, s, T), u2 = P.solve(f2, s, T), u12 = P.solve(2 * f1 - 3 * f2, s, T);
  double lin = 0;
  for (std::size_t k = 0; k < u12.snapshots.size(); ++k)
    lin = std::max(lin, (u12.snapshots[k] - 2 * u1.snapshots[k] + 3 * u2.snapshots[k]).cwiseAbs().maxCoeff());
  lin /= data_scale(u12);
  // restriction: a solution on U solves on every subset of U
  VertexSet V(U.begin(), U.begin() + static_cast<long>(std::max<std::size_t>(1, U.size() / 2)));
  double restr = max_abs_residual(u1, V);
  double dir = max_abs_residual(u1, U);
  double cons = 0;
  bool scheme_exact = cfg.scheme == Scheme::exact;
  for (double t : {s, 0.5 * (s + T)}) {
    Vec b1 = schedule.form_matrix_at(t) * Vec::Ones(n);
    for (auto x : U) cons = std::max(cons, std::abs(b1[static_cast<Eigen::Index>(x)]) / g.measure()[static_cast<Eigen::Index>(x)]);
  }
  Vec f0 = random_on(U, true);
  auto global = Propagator(schedule, cfg).solve(f0, s, T);
  auto smv = check_super_mean_value(schedule, global, U, cfg, tol);
  rep.values["i_linearity"] = lin;
  rep.values["ii_restriction"] = restr;
  rep.values["iii_dirichlet_defect"] = dir;
  rep.values["iv_constants"] = cons;
  rep.values["v_super_mean_value"] = smv.constant;
  bool ok = lin <= tol && smv.status == Status::pass;
  if (scheme_exact) {
    rep.notes.push_back("exact scheme: per-step residuals of the theta predicate are discretization, not reported as failures");
  } else {
    ok = ok && restr <= tol && dir <= tol;
  }
  if (cons > tol) {
    if (schedule.symmetric()) ok = false;
    else rep.notes.push_back("axiom (iv) not applicable: schedule is not left-strongly local on U");
  }
  rep.constant = std::max({lin, scheme_exact ? 0.0 : dir, scheme_exact ? 0.0 : restr});
  rep.budget = tol;
  rep.status = ok ? Status::pass : Status::fail;
  return rep;
}

}  // namespace hklab
