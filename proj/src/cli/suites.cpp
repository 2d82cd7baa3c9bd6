#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hklab/assumptions.hpp"
#include "hklab/experiment.hpp"
#include "hklab/families.hpp"
#include "hklab/geometry.hpp"
#include "hklab/harnack.hpp"
#include "hklab/hke.hpp"
#include "hklab/poincare.hpp"

namespace hklab {

namespace {

std::uint64_t suite_seed(std::uint64_t seed, const std::string& suite) {
  auto it = std::find(known_suites().begin(), known_suites().end(), suite);
  return seed * 1000003ULL + static_cast<std::uint64_t>(it - known_suites().begin());
}

VertexId vertex_param(const ExperimentConfig& cfg, const std::string& suite, const MetricMeasureGraph& g) {
  std::string c = cfg.param(suite, "center", "center");
  if (c == "center") return g.center_vertex();
  auto v = static_cast<VertexId>(std::stoull(c));
  require(v < g.size(), "[" + suite + "] center out of range");
  return v;
}

std::vector<double> dyadic(double lo, double hi) {
  std::vector<double> out;
  for (double r = lo; r <= hi * (1 + 1e-12); r *= 2) out.push_back(r);
  return out;
}

double report_value(const std::map<std::string, std::vector<CertReport>>& done, const std::string& suite,
                    const std::string& inequality, const std::string& key = "") {
  auto it = done.find(suite);
  if (it == done.end()) return NAN;
  for (const auto& r : it->second)
    if (r.inequality == inequality) {
      if (key.empty()) return r.constant;
      auto v = r.values.find(key);
      return v == r.values.end() ? NAN : v->second;
    }
  return NAN;
}

// alpha - c from assumption 0 when that suite ran, else measured on a small family
double alpha_minus_c(const ExperimentPoint& pt, const std::map<std::string, std::vector<CertReport>>& done) {
  double v = report_value(done, "assumptions", "assumption0", "alpha_minus_c");
  if (std::isfinite(v)) return v;
  Rng rng(suite_seed(pt.seed, "assumptions"));
  auto fam = random_smooth_family(*pt.graph, 4, rng);
  return verify_assumption0(*pt.schedule, fam).values.at("alpha_minus_c");
}

LayerConstants cached_layers(const ExperimentPoint& pt, VertexId x, double R, const std::vector<double>& widths,
                             const FunctionFamily& fam) {
  const char* dir = std::getenv("HKLAB_CACHE_DIR");
  std::string key;
  if (dir && *dir) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "layers-%zu-%.12g-%zu-%llu", x, R, widths.size(),
                  static_cast<unsigned long long>(pt.seed));
    key = pt.graph->label() + "-" + pt.Psi.describe() + "-" + buf;
    for (auto& ch : key)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '.') ch = '_';
    std::ifstream in(std::filesystem::path(dir) / (key + ".json"));
    if (in) {
      json j = json::parse(in);
      LayerConstants lc;
      lc.c1 = j.at("c1");
      lc.c2 = j.at("c2");
      lc.widths = j.at("widths").get<std::vector<double>>();
      return lc;
    }
  }
  auto lc = measure_layer_constants(*pt.graph, *pt.form, pt.Psi, x, R, widths, fam);
  if (!key.empty()) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / (key + ".json"));
    out << json{{"c1", lc.c1}, {"c2", lc.c2}, {"widths", lc.widths}}.dump();
  }
  return lc;
}

FunctionFamily ball_family(const ExperimentPoint& pt, VertexId x, double R, Rng& rng) {
  const auto& g = *pt.graph;
  auto fam = dirichlet_eigen_family(*pt.form, x, R, 8);
  fam.append(restrict_family(random_smooth_family(g, 16, rng), g, ball(g, x, R)));
  return fam;
}

FunctionFamily csa_family(const MetricMeasureGraph& g, Rng& rng) {
  FunctionFamily fam = random_smooth_family(g, 16, rng);
  fam.append(random_noise_family(g, 8, rng));
  return fam;
}

// layered cutoff for the suite ball with a certified (eps, C0) attached
CutoffFunction csa_cutoff(const ExperimentPoint& pt, const BallTriple& b, const FunctionFamily& fam, CertReport& rep) {
  const auto& g = *pt.graph;
  std::vector<double> widths;
  for (double s = b.r; s >= g.mesh() && widths.size() < 6; s /= 2) widths.push_back(s);
  if (widths.empty()) widths.push_back(b.r);
  auto lc = cached_layers(pt, b.center, b.R, widths, fam);
  auto psi = layered_cutoff(g, b.center, b.R, b.r, pt.eps, std::max(lc.c1, 1e-12), lc.c2, pt.Psi);
  rep = attach_csa(*pt.form, psi, pt.Psi, fam);
  rep.values["layer_c1"] = lc.c1;
  rep.values["layer_c2"] = lc.c2;
  return psi;
}

CertReport vd_report(const MetricMeasureGraph& g) {
  BallFamily fam;
  for (double R : dyadic(g.mesh(), g.radius()))
    for (VertexId v = 0; v < g.size(); v += std::max<std::size_t>(1, g.size() / 32)) fam.add(v, R, R / 2);
  return certify_vd(g, fam);
}

}  // namespace

BallTriple suite_ball(const ExperimentConfig& cfg, const std::string& suite, const MetricMeasureGraph& g) {
  const double D = g.radius();
  BallTriple b;
  b.center = vertex_param(cfg, suite, g);
  b.R = cfg.number(suite, "R", D / 4);
  // keep the annulus at least two mesh widths when the ball allows it
  b.r = cfg.number(suite, "r", std::max(b.R / 2, std::min(2 * g.mesh(), b.R)));
  require(b.R > 0 && b.r > 0, "[" + suite + "] R and r must be positive");
  return b;
}

std::vector<CertReport> run_suite(const std::string& suite, const ExperimentConfig& cfg, const ExperimentPoint& pt,
                                  const std::map<std::string, std::vector<CertReport>>& done) {
  const auto& g = *pt.graph;
  const auto& form = *pt.form;
  const auto& Psi = pt.Psi;
  const auto& sched = *pt.schedule;
  const double D = g.radius(), h = g.mesh();
  Rng rng(suite_seed(pt.seed, suite));
  const BallTriple b = suite_ball(cfg, suite, g);
  const VertexId x = b.center;
  std::vector<CertReport> out;

  if (suite == "vd") {
    if (!cfg.param("vd", "R", "").empty()) {
      BallFamily fam;
      fam.add(x, b.R, b.r);
      out.push_back(certify_vd(g, fam));
    } else {
      out.push_back(vd_report(g));
    }
  } else if (suite == "rvd") {
    out.push_back(certify_rvd(g, nested_rvd_family(x, dyadic(h, D))));
  } else if (suite == "psi") {
    out.push_back(verify_psi(Psi, psi_samples(h, std::max(2 * h, D), 12)));
  } else if (suite == "pi") {
    out.push_back(certify_pi(g, form, Psi, b, PiMode::strong));
    out.push_back(certify_pi(g, form, Psi, b, PiMode::weak));
  } else if (suite == "wpi") {
    auto psi = plateau_cutoff(g, x, b.R, b.r);
    PiReference ref;
    ref.c0 = report_value(done, "csa", "CSA");
    ref.c_vd = report_value(done, "vd", "VD");
    ref.c_pi = report_value(done, "pi", "PI");
    out.push_back(certify_weighted_pi(g, form, Psi, psi, ref));
  } else if (suite == "pseudo") {
    // open balls of radius h are single points, so averaging starts at 2h
    auto s_grid = dyadic(2 * h, std::max(2 * h, b.R / 2));
    out.push_back(certify_pseudo_pi(g, form, Psi, x, b.R, s_grid, ball_family(pt, x, b.R, rng)));
  } else if (suite == "sobolev") {
    std::optional<double> kappa;
    if (!cfg.param("sobolev", "kappa", "").empty()) kappa = cfg.number("sobolev", "kappa", 2);
    std::optional<double> cvd;
    double v = report_value(done, "vd", "VD");
    if (!kappa) cvd = std::isfinite(v) ? v : vd_report(g).constant;
    out.push_back(certify_sobolev(g, form, Psi, x, b.R, kappa, ball_family(pt, x, b.R, rng), cvd));
  } else if (suite == "csa") {
    CertReport rep;
    csa_cutoff(pt, b, csa_family(g, rng), rep);
    out.push_back(rep);
  } else if (suite == "assumptions") {
    auto smooth = random_smooth_family(g, 16, rng);
    out.push_back(verify_assumption0(sched, smooth));
    CertReport csa;
    Rng crng(suite_seed(pt.seed, "csa"));
    std::vector<CutoffFunction> cuts{csa_cutoff(pt, b, csa_family(g, crng), csa)};
    for (auto& r : verify_skew_assumptions(sched, cuts, Psi, positive_family(smooth))) out.push_back(r);
  } else if (suite == "propagator") {
    SolverConfig sc = pt.solver;
    const double T = cfg.number("propagator", "T", Psi(b.R));
    auto k_full = kernel(sched, 0, T, sc);
    auto k1 = kernel(sched, 0, T / 2, sc), k2 = kernel(sched, T / 2, T, sc);
    out.push_back(check_positivity(k_full, Propagator(sched, sc).m_matrix(0, T)));
    out.push_back(check_chapman_kolmogorov(k1, k2, k_full, g.measure()));
    const double amc = alpha_minus_c(pt, done);
    out.push_back(contraction_check(sched, 0, T, sc, amc + 1, 1));
    VertexSet U = ball(g, x, b.R + b.r);
    out.push_back(check_caloric_axioms(sched, U, 0, T, sc, suite_seed(pt.seed, suite)));
    Vec f = Vec::Zero(static_cast<Eigen::Index>(g.size()));
    for (auto v : U) f[static_cast<Eigen::Index>(v)] = -rng.uniform();
    Propagator dir(sched, sc, U);
    out.push_back(check_max_principle(sched, dir.solve(f, 0, T), U, sc));

    // kernel profile p(t,x,0,x), p(t,y,0,x) with y farthest from x
    Eigen::Index y = 0;
    g.distances().row(static_cast<Eigen::Index>(x)).maxCoeff(&y);
    Vec delta = Vec::Zero(static_cast<Eigen::Index>(g.size()));
    delta[static_cast<Eigen::Index>(x)] = 1 / g.measure()[static_cast<Eigen::Index>(x)];
    auto tr = Propagator(sched, sc).solve(delta, 0, T);
    CertReport prof;
    prof.inequality = "kernel-profile";
    json rows = json::array();
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      rows.push_back({tr.times[k], tr.snapshots[k][static_cast<Eigen::Index>(x)], tr.snapshots[k][y]});
    prof.witness = {{"x", x}, {"y", y}, {"rows", rows}};
    prof.constant = tr.snapshots.back()[static_cast<Eigen::Index>(x)];
    out.push_back(prof);
  } else if (suite == "harnack") {
    const double r = cfg.number("harnack", "radius", b.R);
    HarnackParams hp;
    std::string tau = cfg.param("harnack", "tau", "");
    if (!tau.empty()) hp.tau = HarnackParams::parse_tau(tau);
    hp.delta = cfg.number("harnack", "delta", hp.delta);
    const auto count = static_cast<std::size_t>(cfg.number("harnack", "kernels", 16));
    VertexSet B = ball(g, x, r);
    std::vector<VertexId> sources;
    for (std::size_t i = 0; i < count && i < B.size(); ++i) sources.push_back(B[i * B.size() / std::min(count, B.size())]);
    auto fam = phi_family(sched, x, 0, r, Psi, sources, pt.solver);
    auto rnd = random_phi_family(sched, x, 0, r, Psi, 4, pt.solver, suite_seed(pt.seed, suite));
    fam.insert(fam.end(), rnd.begin(), rnd.end());
    out.push_back(phi_estimate(g, fam, x, 0, r, Psi, hp));

    // estimates on the first kernel column, anchored at the end of its window
    const auto& tr = fam.front();
    MveSpec ms;
    ms.base.x = x;
    ms.base.a = Psi(r);
    ms.base.r = r;
    out.push_back(mve_check(g, tr, pt.p, Psi, ms));
    auto psi = plateau_cutoff(g, x, ms.base.delta_p * r, (ms.base.delta - ms.base.delta_p) * r, true);
    out.push_back(energy_estimate_check(sched, tr, psi, pt.p, Psi, ms.base));
    HolderSpec hs;
    hs.x = x;
    hs.r = r;
    out.push_back(holder_estimate(g, tr, Psi, hs));
  } else if (suite == "hke") {
    Eigen::Index yi = 0;
    (g.distances().row(static_cast<Eigen::Index>(x)).array() - D / 2).abs().minCoeff(&yi);
    const auto y = static_cast<VertexId>(yi);
    const double amc = alpha_minus_c(pt, done);
    DaviesSpec ds;
    ds.alpha_minus_c = amc;
    out.push_back(davies_gaffney_check(sched, x, y, 0, pt.solver, Psi, ds));

    const double t0 = cfg.number("hke", "t_min", Psi(4 * h)), t1 = cfg.number("hke", "t_max", Psi(D / 2));
    const int n = static_cast<int>(cfg.number("hke", "t_count", 8));
    std::vector<KernelMatrix> ks, kd;
    const double Rl = cfg.number("hke", "lower_radius", D / 2);
    VertexSet dom = ball(g, x, Rl);
    Propagator glob(sched, pt.solver), dirp(sched, pt.solver, dom);
    for (int i = 0; i < n; ++i) {
      double t = n == 1 ? t0 : t0 * std::pow(t1 / t0, double(i) / (n - 1));
      ks.push_back(glob.kernel(0, t));
      kd.push_back(dirp.kernel(0, t));
    }
    UpperFitSpec us;
    us.alpha_minus_c = amc;
    out.push_back(upper_hke_fit(g, ks, Psi, us));
    auto lf = lower_hke_fit(g, kd, Psi, {x, Rl, cfg.number("hke", "eps", 0.25)});
    out.push_back(lf.near);
    out.push_back(lf.off);
  } else {
    throw ConfigError("unknown suite '" + suite + "'");
  }
  for (auto& r : out)
    if (r.family.empty()) r.family = suite;
  return out;
}

}  // namespace hklab
