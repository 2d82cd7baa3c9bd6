// One line per acceptance criterion. Exit status 1 when any criterion fails.
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "hklab/assumptions.hpp"
#include "hklab/experiment.hpp"
#include "hklab/families.hpp"
#include "hklab/geometry.hpp"
#include "hklab/harnack.hpp"
#include "hklab/hke.hpp"
#include "hklab/poincare.hpp"

using namespace hklab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

FormPtr make_form(const std::string& spec) { return std::make_shared<const ReferenceForm>(build_space(SpaceSpec::parse(spec))); }

FormSchedule skew(FormPtr f, double lam) {
  auto [b, v] = default_boundary(f->graph());
  return build_nonsymmetric(f, harmonic_profile(*f, b, v), lam);
}

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

double ratio_spread(double a, double b) { return std::max(a, b) / std::min(a, b); }

// ---------------------------------------------------------------- exact identities

void exact_identities(Outcome& o) {
  double worst = 0;
  for (const char* spec : {"path:32", "grid:16", "gasket:3"}) {
    auto form = make_form(spec);
    const auto& g = form->graph();
    const Vec& mu = g.measure();
    auto s = skew(form, 1.0);
    auto d = decompose(s, 0);
    SolverConfig cfg;
    cfg.dt = 1.0 / 256;
    Propagator P(s, cfg);
    Mat T1 = P.transition(0, 1.0 / 32), T2 = P.transition(1.0 / 32, 1.0 / 16), T = P.transition(0, 1.0 / 16);
    auto k1 = P.kernel(0, 1.0 / 32), k2 = P.kernel(1.0 / 32, 1.0 / 16), k = P.kernel(0, 1.0 / 16);
    auto ck = check_chapman_kolmogorov(k1, k2, k, mu);
    o.require(ck.values.at("aligned") == 1, std::string(spec) + " grids aligned");
    worst = std::max(worst, ck.constant);
    Rng rng(1234);
    for (int trial = 0; trial < 50; ++trial) {
      Vec f = random_vec(g.size(), rng), h = random_vec(g.size(), rng);
      const double ef = energy(*form, f, f), eh = energy(*form, h, h);
      const double scale = std::sqrt(ef * eh) + 1e-300;
      Vec gam = energy_measure(*form, f, h), gff = energy_measure(*form, f, f), ghh = energy_measure(*form, h, h);
      worst = std::max(worst, std::abs(gam.dot(mu) - energy(*form, f, h)) / scale);
      for (Eigen::Index x = 0; x < gam.size(); ++x) {
        double bound = std::sqrt(gff[x] * ghh[x]);
        worst = std::max(worst, std::max(0.0, std::abs(gam[x]) - bound) / (bound + 1e-300));
      }
      worst = std::max(worst, std::abs(s.evaluate(0, f, f) - ef) / ef);
      worst = std::max(worst, std::abs(d.sym(f, h) - energy(*form, f, h)) / scale);
      const double lr = std::abs(d.l(h, f)) + std::abs(d.r(f, h)) + scale;
      worst = std::max(worst, std::abs(d.r(f, h) + d.l(h, f)) / lr);
      Vec a = T * f, b = T2 * (T1 * f);
      worst = std::max(worst, (a - b).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff());
    }
  }
  o.detail << "worst relative defect " << worst;
  o.require(worst <= 1e-10, "defect <= 1e-10");
}

// ---------------------------------------------------------------- closed forms

void closed_forms(Outcome& o) {
  auto edge = make_form("path:1");
  auto s = reference_schedule(edge);
  double kerr = 0;
  for (double t : {0.1, 0.5, 1.0, 3.0}) {
    auto k = kernel(s, 0, t, SolverConfig::parse("exact"));
    kerr = std::max({kerr, std::abs(k.p(0, 0) - (1 + std::exp(-2 * t)) / 2), std::abs(k.p(1, 0) - (1 - std::exp(-2 * t)) / 2)});
  }
  o.detail << "two-vertex error " << kerr;
  o.require(kerr <= 1e-12, "two-vertex kernel");

  const double t = 1.0, exact = (1 + std::exp(-2 * t)) / 2;
  for (auto [theta, order] : {std::pair{1.0, 1.0}, std::pair{0.5, 2.0}}) {
    std::vector<double> err;
    for (double dt : {0.1, 0.05, 0.025, 0.0125}) {
      SolverConfig cfg;
      cfg.scheme = theta == 1 ? Scheme::backward_euler : Scheme::theta;
      cfg.theta = theta;
      cfg.dt = dt;
      err.push_back(std::abs(kernel(s, 0, t, cfg).p(0, 0) - exact));
    }
    double lo = INFINITY, hi = 0;
    for (std::size_t i = 1; i < err.size(); ++i) {
      double p = std::log2(err[i - 1] / err[i]);
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    o.detail << "; order theta=" << theta << " in [" << lo << ", " << hi << "]";
    o.require(lo >= 0.75 * order && hi <= 1.25 * order, "observed order");
  }

  RateFunction closed, search{ScalingFunction::power(2), RateVariant::phi, true};
  double rerr = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      double R = 0.01 * std::pow(1000.0, i / 9.0), tt = 0.01 * std::pow(1000.0, j / 9.0);
      double want = R * R / (4 * tt);
      for (const auto* rf : {&closed, &search})
        rerr = std::max(rerr, std::abs(rate(*rf, R, tt) - want) / std::max(1.0, want));
    }
  o.detail << "; rate error " << rerr;
  o.require(rerr <= 1e-9, "rate R^2/(4t)");

  auto path = make_form("path:32");
  Vec vals(2);
  vals << 0, 1;
  auto prof = harmonic_profile(*path, {0, 32}, vals);
  double herr = 0;
  for (Eigen::Index i = 0; i <= 32; ++i) herr = std::max(herr, std::abs(prof.h[i] - i / 32.0));
  o.detail << "; harmonic error " << herr;
  o.require(herr <= 1e-12, "linear harmonic profile");
}

// ---------------------------------------------------------------- positivity and comparison

void positivity(Outcome& o) {
  auto form = make_form("gasket:3");
  const auto& g = form->graph();
  auto sym = reference_schedule(form);
  double minp = INFINITY;
  for (const char* sc : {"be", "be:dt=0.001", "theta:0.5,dt=0.001", "exact"})
    for (double t : {0.01, 0.1, 1.0}) {
      auto rep = check_positivity(kernel(sym, 0, t, SolverConfig::parse(sc)));
      minp = std::min(minp, rep.values.at("min_entry"));
      o.require(rep.values.at("strictly_positive") == 1, std::string("strictly positive ") + sc);
    }
  o.detail << "min symmetric entry " << minp;

  double mp = 0, smv = INFINITY, dom = INFINITY;
  SolverConfig cfg;
  cfg.dt = 1.0 / 256;
  for (int seed = 0; seed < 8; ++seed) {
    Rng rng(100 + seed);
    auto s = skew(form, seed % 2 ? 1.0 : 0.0);
    auto x = static_cast<VertexId>(rng.below(g.size()));
    VertexSet U = ball(g, x, 0.4), V = ball(g, x, 0.6);
    const auto n = static_cast<Eigen::Index>(g.size());
    Vec f = Vec::Zero(n), h = Vec::Zero(n);
    for (auto y : U) {
      f[static_cast<Eigen::Index>(y)] = -rng.uniform();
      h[static_cast<Eigen::Index>(y)] = rng.uniform();
    }
    Propagator PU(s, cfg, U), PV(s, cfg, V), PG(s, cfg);
    auto r = check_max_principle(s, PU.solve(f, 0, 0.5), U, cfg);
    o.require(r.status == Status::pass, "max principle status");
    mp = std::max(mp, r.constant);
    smv = std::min(smv, check_super_mean_value(s, PG.solve(h, 0, 0.5), U, cfg).values.at("min_difference"));
    smv = std::min(smv, check_super_mean_value(s, PV.solve(h, 0, 0.5), U, cfg).values.at("min_difference"));
    auto kU = PU.kernel(0, 0.5), kV = PV.kernel(0, 0.5), kG = PG.kernel(0, 0.5);
    dom = std::min({dom, (kV.p - kU.p).minCoeff(), (kG.p - kV.p).minCoeff()});
  }
  o.detail << "; max-principle excess " << mp << "; super-mean-value min " << smv << "; domain monotonicity min " << dom;
  o.require(mp <= 1e-10, "max principle");
  o.require(smv >= -1e-10, "super mean value");
  o.require(dom >= -1e-10, "domain monotonicity");
}

// ---------------------------------------------------------------- chain rule honesty

void chain_rule(Outcome& o) {
  std::vector<double> ch, pr;
  for (int m : {2, 3, 4}) {
    auto form = std::make_shared<const ReferenceForm>(build_gasket(m));
    auto amb = ambient_family(form->graph());
    auto d = decompose(skew(form, 1.0), 0);
    double c = 0, p = 0;
    for (std::size_t i = 1; i < amb.size(); ++i)
      for (std::size_t j = 1; j < amb.size(); ++j) {
        c = std::max(c, chain_rule_defect(*form, ScalarMap::smooth_default(), amb.members[i], amb.members[j]));
        p = std::max(p, product_rule_defect_l1(d, amb.members[i], amb.members[j], amb.members[0]));
      }
    ch.push_back(c);
    pr.push_back(p);
  }
  o.detail << "chain " << ch[0] << " > " << ch[1] << " > " << ch[2] << "; l-product " << pr[0] << " > " << pr[1]
            << " > " << pr[2];
  o.require(ch[0] > ch[1] && ch[1] > ch[2], "chain defect decreasing");
  o.require(pr[0] > pr[1] && pr[1] > pr[2], "product defect decreasing");
}

// ---------------------------------------------------------------- constant stability

struct Setting {
  std::string space;
  ScalingFunction Psi;
  VertexId x;
  double R, r;  // physical ball B(x, R + r)
  std::vector<double> vd_radii;
};

FunctionFamily ball_family(const ReferenceForm& form, VertexId x, double R) {
  const auto& g = form.graph();
  auto fam = dirichlet_eigen_family(form, x, R, 8);
  Rng rng(77);
  fam.append(restrict_family(random_smooth_family(g, 16, rng), g, ball(g, x, R)));
  return fam;
}

std::map<std::string, double> constants(const Setting& st) {
  auto form = make_form(st.space);
  const auto& g = form->graph();
  std::map<std::string, double> out;
  const VertexId x = st.x;

  BallFamily vf;
  for (VertexId c : {x, g.center_vertex()})
    for (double R : st.vd_radii) vf.add(c, R, R / 2);
  out["C_VD"] = certify_vd(g, vf).constant;
  BallTriple b{x, st.R, st.r};
  out["C_PI"] = certify_pi(g, *form, st.Psi, b, PiMode::strong).constant;
  out["C_wPI"] = certify_weighted_pi(g, *form, st.Psi, plateau_cutoff(g, x, st.R, st.r)).constant;
  out["C_SI"] = certify_sobolev(g, *form, st.Psi, x, st.R + st.r, 2.0, ball_family(*form, x, st.R + st.r)).constant;

  Rng rng(78);
  FunctionFamily fam = random_smooth_family(g, 16, rng);
  std::vector<double> widths{st.r, st.r / 2, st.r / 4};
  auto lc = measure_layer_constants(g, *form, st.Psi, x, st.R, widths, fam);
  auto psi = layered_cutoff(g, x, st.R, st.r, 0.125, std::max(lc.c1, 1e-12), lc.c2, st.Psi);
  out["C0"] = attach_csa(*form, psi, st.Psi, fam).constant;

  const double rp = st.R + st.r;
  SolverConfig cfg;
  cfg.dt = st.Psi(rp) / 512;
  std::vector<VertexId> sources;
  for (auto y : ball(g, x, rp / 2)) sources.push_back(y);
  auto kf = phi_family(reference_schedule(form), x, 0, rp, st.Psi, sources, cfg);
  out["C_PHI"] = phi_estimate(g, kf, x, 0, rp, st.Psi, HarnackParams{}).constant;
  return out;
}

double pi_all_scales(const std::string& space, const ScalingFunction& Psi) {
  auto form = make_form(space);
  const auto& g = form->graph();
  double c = 0;
  for (double s = 2 * g.mesh(); s <= 0.5 + 1e-12; s *= 2)
    c = std::max(c, certify_pi(g, *form, Psi, BallTriple{0, s / 2, s / 2}, PiMode::strong).constant);
  return c;
}

void stability(Outcome& o) {
  const auto gpsi = ScalingFunction::power(gasket_walk_dimension());
  const auto r2 = ScalingFunction::power(2);
  std::vector<std::pair<Setting, Setting>> pairs;
  pairs.push_back({{"gasket:3", gpsi, 0, 0.25, 0.25, {0.25, 0.5}}, {"gasket:4", gpsi, 0, 0.25, 0.25, {0.25, 0.5}}});
  auto path = [&](int n) {
    auto g = build_space(SpaceSpec::parse("path:" + std::to_string(n) + ",length=1"));
    return Setting{"path:" + std::to_string(n) + ",length=1", r2, g->center_vertex(), 0.125, 0.125, {1.0 / 32, 1.0 / 16, 1.0 / 8, 0.25}};
  };
  pairs.push_back({path(64), path(128)});
  for (const auto& [a, b] : pairs) {
    auto ca = constants(a), cb = constants(b);
    o.detail << a.space << " vs " << b.space << ":";
    for (const auto& [k, v] : ca) {
      double w = cb.at(k);
      o.detail << " " << k << " " << v << "/" << w;
      o.require(std::isfinite(v) && std::isfinite(w) && v > 0 && w > 0, k + " finite on " + a.space);
      if (v > 0 && w > 0) o.require(ratio_spread(v, w) <= 2, k + " within 2x on " + a.space);
    }
    o.detail << "; ";
  }
  // control: r^2 on the gasket, C_PI over every dyadic corner ball from 2 mesh to 1/2
  double w3 = pi_all_scales("gasket:3", r2), w4 = pi_all_scales("gasket:4", r2);
  double c3 = pi_all_scales("gasket:3", gpsi), c4 = pi_all_scales("gasket:4", gpsi);
  o.detail << "wrong-psi C_PI " << w3 << " -> " << w4 << " (drift " << ratio_spread(w3, w4) << "), right-psi " << c3
           << " -> " << c4;
  o.require(ratio_spread(w3, w4) > 2, "wrong-psi control drifts by more than 2x");
}

// ---------------------------------------------------------------- non-symmetric robustness

void nonsymmetric(Outcome& o) {
  auto form = make_form("gasket:3");
  const auto& g = form->graph();
  const auto Psi = ScalingFunction::power(gasket_walk_dimension());
  const VertexId x = 0;
  const double R = 0.25, r = 0.25;

  Rng rng(5);
  FunctionFamily fam = random_smooth_family(g, 16, rng);
  fam.append(random_noise_family(g, 8, rng));
  std::vector<double> widths{r, r / 2, r / 4};
  auto lc = measure_layer_constants(g, *form, Psi, x, R, widths, fam);
  auto psi = layered_cutoff(g, x, R, r, 0.125, std::max(lc.c1, 1e-12), lc.c2, Psi);
  attach_csa(*form, psi, Psi, fam);

  std::map<double, std::vector<double>> skewc;
  std::map<double, double> dg, phi;
  for (double lam : {0.0, 0.5, 1.0}) {
    auto s = skew(form, lam);
    auto reps = verify_skew_assumptions(s, {psi}, Psi, positive_family(fam));
    for (std::size_t i = 0; i < 2; ++i) skewc[lam].push_back(reps[i].constant);

    auto a0 = verify_assumption0(s, fam);
    DaviesSpec ds;
    ds.alpha_minus_c = a0.values.at("alpha_minus_c");
    SolverConfig cfg;
    cfg.dt = 1.0 / 512;
    auto rep = davies_gaffney_check(s, 0, 1, 0, cfg, Psi, ds);
    dg[lam] = rep.status == Status::measured ? rep.constant : INFINITY;

    const double rp = R + r;
    SolverConfig pc;
    pc.dt = Psi(rp) / 512;
    std::vector<VertexId> sources;
    for (auto y : ball(g, x, rp / 2)) sources.push_back(y);
    phi[lam] = phi_estimate(g, phi_family(s, x, 0, rp, Psi, sources, pc), x, 0, rp, Psi, HarnackParams{}).constant;
  }
  o.detail << "C_PHI";
  for (auto [lam, v] : phi) {
    o.detail << " " << v;
    o.require(std::isfinite(v), "finite C_PHI");
  }
  for (std::size_t i = 0; i < 2; ++i) {
    double per_half = skewc[0.5][i] / 0.5, per_one = skewc[1.0][i];
    o.detail << "; skew-" << i + 1 << " " << skewc[0.0][i] << ", " << skewc[0.5][i] << ", " << skewc[1.0][i];
    o.require(std::abs(skewc[0.0][i]) <= 0.1 * per_one, "skew constant vanishes at lambda 0");
    o.require(std::abs(per_half - per_one) <= 0.1 * per_one, "skew constant linear in lambda");
  }
  o.detail << "; DG C' " << dg[0.0] << ", " << dg[0.5] << ", " << dg[1.0];
  for (auto [lam, v] : dg) o.require(std::isfinite(v), "DG feasible");
  o.require(dg[1.0] <= 4 * dg[0.0], "DG C'(1) <= 4 C'(0)");
}

// ---------------------------------------------------------------- heat kernel fits

void hke(Outcome& o) {
  const auto Psi = ScalingFunction::power(2);
  std::vector<double> taus;
  for (int i = 0; i < 10; ++i) taus.push_back(4 * std::pow(256.0, i / 9.0));
  double diag[2], near[2], slope = NAN;
  int i = 0;
  for (const char* spec : {"path:128", "path:256,length=128"}) {
    auto form = make_form(spec);
    const auto& g = form->graph();
    std::vector<KernelMatrix> ks;
    for (double t : taus) ks.push_back(kernel(reference_schedule(form), 0, t, SolverConfig::parse("exact")));
    auto up = upper_hke_fit(g, ks, Psi);
    diag[i] = up.values.at("C_diag");
    if (i == 0) slope = up.values.count("decay_slope") ? up.values.at("decay_slope") : NAN;

    LowerFitSpec ls;
    ls.center = g.center_vertex();
    ls.radius = 32;
    ls.eps = 0.25;
    VertexSet B = ball(g, ls.center, ls.radius);
    std::vector<KernelMatrix> kd;
    for (double t : {4.0, 16.0, 64.0, 256.0}) kd.push_back(kernel(reference_schedule(form), 0, t, SolverConfig::parse("exact"), B));
    near[i] = lower_hke_fit(g, kd, Psi, ls).near.constant;
    ++i;
  }
  o.detail << "decay slope " << slope << "; C_diag " << diag[0] << " / " << diag[1] << "; c' " << near[0] << " / "
           << near[1];
  o.require(slope >= -1.5 && slope <= -1 / 1.5, "Gaussian decay slope");
  o.require(ratio_spread(diag[0], diag[1]) <= 2, "on-diagonal stability");
  o.require(near[0] > 0 && near[1] > 0, "near-diagonal lower constant positive");
}

// ---------------------------------------------------------------- determinism

void determinism(Outcome& o) {
  namespace fs = std::filesystem;
  auto cfg = ExperimentConfig::parse(
      "space = path:16\nseed = 7\nsolver = be:dt=0.001\nschedule = skew:0.5\n"
      "[suites]\nrun = vd, pi, csa, assumptions, propagator, hke\n[sweep]\nlambda = 0, 1\n");
  std::string dumps[2];
  for (int k = 0; k < 2; ++k) {
    cfg.output_dir = (fs::temp_directory_path() / ("hklab_accept_det" + std::to_string(k))).string();
    fs::remove_all(cfg.output_dir);
    auto b = run_experiment(cfg);
    write_bundle(b, cfg);
    std::ifstream in(fs::path(cfg.output_dir) / "bundle.json", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    dumps[k] = ss.str();
    for (const auto& s : ordered_suites(cfg.suites)) {
      std::ifstream c(fs::path(cfg.output_dir) / (s + ".csv"), std::ios::binary);
      std::stringstream cs;
      cs << c.rdbuf();
      dumps[k] += cs.str();
    }
    fs::remove_all(cfg.output_dir);
  }
  o.detail << dumps[0].size() << " bytes of bundle and CSV";
  o.require(!dumps[0].empty() && dumps[0] == dumps[1], "byte-identical reruns");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all = {
      {"exact-identities", 1, exact_identities},
      {"closed-forms", 1, closed_forms},
      {"positivity-comparison", 30, positivity},
      {"chain-rule-honesty", 60, chain_rule},
      {"constant-stability", 600, stability},
      {"nonsymmetric-robustness", 300, nonsymmetric},
      {"hke-fits", 300, hke},
      {"determinism", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(secs <= c.budget_s, "time budget");
    std::printf("%s %s (%.2fs / %.0fs): %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, c.budget_s, o.detail.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed ? 1 : 0;
}
