#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hklab/assumptions.hpp"
#include "hklab/families.hpp"
#include "hklab/hke.hpp"

using namespace hklab;

namespace {

FormPtr make_form(const std::string& spec) { return std::make_shared<const ReferenceForm>(build_space(SpaceSpec::parse(spec))); }
FormPtr make_form(GraphPtr g) { return std::make_shared<const ReferenceForm>(std::move(g)); }

FormSchedule skew(FormPtr f, double lam) {
  auto [b, v] = default_boundary(f->graph());
  return build_nonsymmetric(f, harmonic_profile(*f, b, v), lam);
}

// brute force: dense log grid then golden refinement of r -> R/r - t/Psi(r) style objective
double rate_search(const ScalingFunction& Psi, double R, double t) {
  auto obj = [&](double lr) {
    double r = std::exp(lr);
    return R / r - t / Psi(r);
  };
  double best = -INFINITY, at = 0;
  for (int k = 0; k <= 4000; ++k) {
    double lr = -20 + 40.0 * k / 4000;
    if (obj(lr) > best) {
      best = obj(lr);
      at = lr;
    }
  }
  double a = at - 0.01, b = at + 0.01;
  const double gr = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 200; ++it) {
    double c = b - gr * (b - a), d = a + gr * (b - a);
    if (obj(c) > obj(d)) b = d;
    else a = c;
  }
  return std::max(0.0, obj(0.5 * (a + b)));
}

std::vector<KernelMatrix> kernels_at(const FormSchedule& s, const std::vector<double>& taus, const SolverConfig& cfg,
                                     std::optional<VertexSet> dom = {}) {
  std::vector<KernelMatrix> out;
  for (double t : taus) out.push_back(kernel(s, 0, t, cfg, dom));
  return out;
}

std::vector<double> geometric(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, i / double(n - 1)));
  return out;
}

}  // namespace

TEST_CASE("rate examples") {
  RateFunction rf;
  CHECK(rate(rf, 2, 1) == doctest::Approx(1).epsilon(1e-12));
  CHECK(rate(rf, 0, 1) == 0);
  CHECK_THROWS(rate(rf, 1, 0));
  CHECK_THROWS(rate(rf, 1, -1));
  rf.force_search = true;
  CHECK(rate(rf, 2, 1) == doctest::Approx(1).epsilon(1e-9));
  CHECK(rate(rf, 0, 1) == 0);

  const double beta = gasket_walk_dimension();
  CHECK(beta == doctest::Approx(std::log(5.0) / std::log(2.0)));
  RateFunction g{ScalingFunction::power(beta), RateVariant::phi, false};
  for (double R : {0.1, 1.0, 3.0})
    for (double t : {0.01, 0.5, 2.0}) {
      double closed = (1 - 1 / beta) * std::pow(beta, -1 / (beta - 1)) * std::pow(std::pow(R, beta) / t, 1 / (beta - 1));
      CHECK(rate(g, R, t) == doctest::Approx(closed).epsilon(1e-9));
    }
}

TEST_CASE("rate: closed form against search on a grid") {
  for (double beta : {2.0, gasket_walk_dimension(), 3.0}) {
    for (auto variant : {RateVariant::phi, RateVariant::phi_beta}) {
      RateFunction closed{ScalingFunction::power(beta), variant, false};
      RateFunction search{ScalingFunction::power(beta), variant, true};
      for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) {
          double R = 0.05 * std::pow(60.0, i / 9.0), t = 0.01 * std::pow(100.0, j / 9.0);
          double a = rate(closed, R, t), b = rate(search, R, t);
          CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, a));
          if (variant == RateVariant::phi) CHECK(std::abs(a - rate_search(closed.Psi, R, t)) <= 1e-7 * std::max(1.0, a));
          if (beta == 2.0) CHECK(a == doctest::Approx(R * R / (4 * t)).epsilon(1e-12));
        }
    }
  }
}

TEST_CASE("rate monotonicity and non-power scaling") {
  for (auto Psi : {ScalingFunction::power(2), ScalingFunction::piecewise_power({0.5}, {2.0, 3.0}, 1.0, 2.0)}) {
    for (auto variant : {RateVariant::phi, RateVariant::phi_beta}) {
      RateFunction rf{Psi, variant, false};
      for (double t : {0.05, 0.3, 1.0}) {
        double prev = -1;
        for (double R = 0; R <= 3; R += 0.25) {
          double v = rate(rf, R, t);
          CHECK(v >= 0);
          CHECK(v >= prev - 1e-12);
          prev = v;
        }
      }
      for (double R : {0.5, 2.0}) {
        double prev = INFINITY;
        for (double t = 0.05; t <= 3; t *= 1.5) {
          double v = rate(rf, R, t);
          CHECK(v <= prev + 1e-12);
          prev = v;
        }
      }
    }
  }
  RateFunction rf;
  for (double target : {0.0, 0.5, 3.0}) {
    double u = rate_inverse_time(rf, 2, target);
    if (target <= 0) CHECK(u == 0);
    else CHECK(rate(rf, 2, u) == doctest::Approx(target).epsilon(1e-8));
  }
}

TEST_CASE("davies-gaffney on the path") {
  auto form = make_form("path:128");
  auto Psi = ScalingFunction::power(2);
  auto sym = davies_gaffney_check(reference_schedule(form), 64, 96, 0, SolverConfig{}, Psi);
  REQUIRE(sym.status == Status::measured);
  CHECK(std::isfinite(sym.constant));
  const double slope = sym.values.at("decay_slope");
  MESSAGE("decay slope " << slope << ", C' " << sym.constant);
  CHECK(slope >= -0.25 * 1.5);
  CHECK(slope <= -0.25 / 1.5);
  CHECK_THROWS(davies_gaffney_check(reference_schedule(form), 64, 64, 0, SolverConfig{}, Psi));
}

TEST_CASE("davies-gaffney: long times reduce to contraction") {
  auto form = make_form("path:32");
  auto Psi = ScalingFunction::power(2);
  DaviesSpec spec;
  spec.horizon = 400;
  SolverConfig cfg;
  cfg.dt = 1;
  auto rep = davies_gaffney_check(reference_schedule(form), 8, 24, 0, cfg, Psi, spec);
  CHECK(rep.status == Status::measured);
  CHECK(rep.values.at("nonpositive_points") == 0);
}

TEST_CASE("davies-gaffney under the skew sweep") {
  auto form = make_form("gasket:3");
  const auto& g = form->graph();
  auto Psi = ScalingFunction::parse("gasket");
  VertexId x = 0, y = 1;
  SolverConfig cfg;
  cfg.dt = 1.0 / 512;
  double base = 0;
  for (double lam : {0.0, 1.0}) {
    auto s = skew(form, lam);
    DaviesSpec spec;
    Rng rng(5);
    auto a0 = verify_assumption0(s, random_smooth_family(g, 16, rng));
    spec.alpha_minus_c = a0.values.at("alpha_minus_c");
    auto rep = davies_gaffney_check(s, x, y, 0, cfg, Psi, spec);
    REQUIRE(rep.status == Status::measured);
    if (lam == 0) base = rep.constant;
    else CHECK(rep.constant <= 4 * base);
  }
}

TEST_CASE("upper fit: two-vertex edge") {
  auto form = make_form("path:1");
  auto Psi = ScalingFunction::power(2);
  auto ks = kernels_at(reference_schedule(form), geometric(1e-3, 10, 40), SolverConfig::parse("exact"));
  auto rep = upper_hke_fit(form->graph(), ks, Psi);
  CHECK(rep.status == Status::measured);
  // V = mu(x) = 1 at every scale the open balls see
  CHECK(rep.values.at("C_diag") == doctest::Approx((1 + std::exp(-2e-3)) / 2).epsilon(1e-10));
  CHECK(rep.values.at("C_diag") <= 1);
  CHECK(rep.witness.at("diag").at("t_minus_s").get<double>() == doctest::Approx(1e-3));
  CHECK(rep.constant >= rep.values.at("C_diag"));
  CHECK_THROWS(upper_hke_fit(form->graph(), {}, Psi));
}

TEST_CASE("upper fit: delta normalization and measure scaling") {
  auto Psi = ScalingFunction::power(2);
  auto base = build_space(SpaceSpec::parse("path:32"));
  auto f1 = make_form(base);
  auto f3 = make_form(std::make_shared<MetricMeasureGraph>(base->scaled(3, 1)));
  auto taus = geometric(0.05, 20, 12);
  SolverConfig cfg = SolverConfig::parse("exact");
  for (double lam : {0.0, 3.0}) {
    auto r1 = upper_hke_fit(f1->graph(), kernels_at(skew(f1, lam), taus, cfg), Psi);
    // the time scale stretches with mu; the kernel family is sampled at matched times
    std::vector<double> t3;
    for (double t : taus) t3.push_back(3 * t);
    auto r3 = upper_hke_fit(f3->graph(), kernels_at(skew(f3, lam), t3, cfg), ScalingFunction::power(2, 3));
    CHECK(r3.values.at("C_inf") == doctest::Approx(r1.values.at("C_inf")).epsilon(1e-8));
    CHECK(r3.values.at("C_diag") == doctest::Approx(r1.values.at("C_diag")).epsilon(1e-8));
    CHECK(r3.constant == doctest::Approx(r1.constant).epsilon(1e-6));
  }
  // tau -> 0: p -> delta / mu, V -> mu
  auto k0 = kernel(reference_schedule(f1), 0, 1e-9, cfg);
  auto r0 = upper_hke_fit(f1->graph(), {k0}, Psi);
  CHECK(r0.values.at("C_diag") == doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("upper fit: on-diagonal stability across resolutions") {
  auto Psi = ScalingFunction::power(2);
  double c[2];
  int i = 0;
  for (int n : {64, 128}) {
    auto form = make_form("path:" + std::to_string(n) + ",length=1");
    SolverConfig cfg;
    cfg.dt = 1.0 / 4096;
    auto rep = upper_hke_fit(form->graph(), kernels_at(reference_schedule(form), geometric(1.0 / 256, 0.25, 8), cfg), Psi);
    c[i++] = rep.values.at("C_diag");
    CHECK(rep.status == Status::measured);
  }
  MESSAGE("C_diag 64 " << c[0] << " 128 " << c[1]);
  CHECK(c[1] <= 2 * c[0]);
  CHECK(c[0] <= 2 * c[1]);
}

TEST_CASE("lower fit") {
  auto Psi = ScalingFunction::power(2);
  // two-vertex ball = whole graph, eps small leaves only x = y
  auto edge = make_form("path:1");
  std::vector<KernelMatrix> ks{kernel(reference_schedule(edge), 0, 0.5, SolverConfig::parse("exact"))};
  LowerFitSpec ls;
  ls.center = 0;
  ls.radius = 1.5;
  ls.eps = 0.1;
  auto two = lower_hke_fit(edge->graph(), ks, Psi, ls);
  // Psi^{-1}(0.5) < R_x, V = mu(x) = 1
  CHECK(two.near.constant == doctest::Approx((1 + std::exp(-1.0)) / 2).epsilon(1e-10));

  double c[2];
  int i = 0;
  for (int n : {64, 128}) {
    auto form = make_form("path:" + std::to_string(n) + ",length=1");
    const auto& g = form->graph();
    LowerFitSpec spec;
    spec.center = g.center_vertex();
    spec.radius = 0.25;
    spec.eps = 0.25;
    SolverConfig cfg;
    cfg.dt = 1.0 / 4096;
    auto B = ball(g, spec.center, spec.radius);
    auto fit = lower_hke_fit(g, kernels_at(reference_schedule(form), geometric(1.0 / 512, 1.0 / 16, 6), cfg, B), Psi, spec);
    CHECK(fit.near.status == Status::measured);
    CHECK(fit.near.constant > 0);
    CHECK(fit.off.status == Status::measured);
    CHECK(fit.off.constant > 0);
    c[i++] = fit.near.constant;
  }
  CHECK(c[1] <= 2 * c[0]);
  CHECK(c[0] <= 2 * c[1]);

  auto gasket = make_form("gasket:3");
  const auto& gg = gasket->graph();
  REQUIRE(!gg.geodesic());
  LowerFitSpec gs;
  gs.center = gg.center_vertex();
  gs.radius = 0.4;
  SolverConfig cfg;
  cfg.dt = 1.0 / 1024;
  auto gk = kernels_at(reference_schedule(gasket), {0.01, 0.02}, cfg, ball(gg, gs.center, gs.radius));
  auto gf = lower_hke_fit(gg, gk, ScalingFunction::parse("gasket"), gs);
  CHECK(gf.near.constant > 0);
  CHECK(gf.off.status == Status::not_applicable);
  CHECK(gf.off.ok());
}
