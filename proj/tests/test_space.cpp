#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "hklab/geometry.hpp"
#include "hklab/scaling.hpp"

using namespace hklab;

namespace {

// brute-force ball from the distance matrix
std::vector<VertexId> slow_ball(const MetricMeasureGraph& g, VertexId x, double r) {
  std::vector<VertexId> out;
  for (VertexId y = 0; y < g.size(); ++y)
    if (g.distance(x, y) < r) out.push_back(y);
  return out;
}

}  // namespace

TEST_CASE("gasket vertex and edge counts") {
  auto g1 = build_gasket(1);
  CHECK(g1->size() == 6);
  CHECK(g1->edges().size() == 9);
  // independent count: every level multiplies edges by 3, vertices 3(3^m+1)/2
  for (int m = 1; m <= 5; ++m) {
    auto g = build_gasket(m);
    std::size_t expect = 3 * (static_cast<std::size_t>(std::pow(3, m)) + 1) / 2;
    CHECK(g->size() == expect);
    CHECK(g->edges().size() == static_cast<std::size_t>(std::pow(3, m + 1)));
    CHECK(is_connected(*g, slow_ball(*g, 0, INFINITY)));
  }
  CHECK(build_space(SpaceSpec::parse("gasket:3"))->size() == 42);
}

TEST_CASE("gasket defaults: conductance (5/3)^m, measure 3^-m") {
  auto g = build_gasket(3);
  for (const auto& e : g->edges()) CHECK(e.conductance == doctest::Approx(std::pow(5.0 / 3.0, 3)).epsilon(1e-14));
  for (Eigen::Index i = 0; i < g->measure().size(); ++i) CHECK(g->measure()[i] == doctest::Approx(1.0 / 27));
  auto gg = build_space(SpaceSpec::parse("family=gasket,level=3,metric=graph"));
  CHECK(gg->metric() == MetricKind::graph);
  CHECK(gg->geodesic());
}

TEST_CASE("path counts") {
  auto g = build_path(2);
  CHECK(g->size() == 3);
  CHECK(g->edges().size() == 2);
  CHECK(build_space(SpaceSpec::parse("path:128"))->size() == 129);
}

TEST_CASE("unknown family and vertex cap") {
  CHECK_THROWS(build_space(SpaceSpec::parse("carpet:2")));
  BuildLimits lim;
  lim.vertex_cap = 100;
  CHECK_THROWS(build_space(SpaceSpec::parse("gasket:4"), lim));
}

TEST_CASE("ball and volume examples") {
  auto g = build_path(4);
  CHECK(ball(*g, 2, 0).empty());
  auto b = ball(*g, 2, 1.5);
  CHECK(b == VertexSet{1, 2, 3});
  CHECK(volume(*g, 2, 1.5) == 3);
  CHECK(volume(*g, 2, 0) == 0);
  CHECK(ball(*g, 0, 100).size() == g->size());
  CHECK(volume(*g, 0, 100) == doctest::Approx(g->total_mass()));
  // open ball excludes ties
  CHECK(ball(*g, 2, 1.0) == VertexSet{2});
}

TEST_CASE("ball monotone in r and volume consistent with ball") {
  for (auto spec : {"gasket:3", "path:16", "grid:5"}) {
    auto g = build_space(SpaceSpec::parse(spec));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0, g->diameter() * 1.1);
    for (int k = 0; k < 40; ++k) {
      VertexId x = rng() % g->size();
      double r1 = U(rng), r2 = U(rng);
      if (r1 > r2) std::swap(r1, r2);
      auto b1 = ball(*g, x, r1), b2 = ball(*g, x, r2);
      CHECK(std::includes(b2.begin(), b2.end(), b1.begin(), b1.end()));
      CHECK(b1 == slow_ball(*g, x, r1));
      double m = 0;
      for (auto v : b2) m += g->measure()[static_cast<Eigen::Index>(v)];
      CHECK(volume(*g, x, r2) == m);
      if (r1 > 0) CHECK(std::count(b1.begin(), b1.end(), x) == 1);
    }
  }
}

TEST_CASE("metric axioms on sampled triples") {
  for (auto spec : {"gasket:3", "gasket:3,metric=graph", "path:16", "grid:5"}) {
    auto g = build_space(SpaceSpec::parse(spec));
    CHECK(metric_defect(*g, 500, 3) <= 1e-12);
    CHECK((g->distances() - g->distances().transpose()).cwiseAbs().maxCoeff() == 0);
  }
}

TEST_CASE("certify_vd examples") {
  auto g = build_path(8);
  BallFamily f;
  f.add(4, 2.5, 2);
  auto rep = certify_vd(*g, f);
  CHECK(rep.constant == doctest::Approx(9.0 / 5.0));
  CHECK(rep.values.at("nu") == doctest::Approx(std::log2(1.8)));

  // single vertex: every ball equal
  auto one = graph_from_json(json::parse(R"({"vertices":[{"id":0,"measure":2}],"edges":[],"metric":"graph","mesh":1})"));
  BallFamily f1;
  f1.add(0, 1, 0.5);
  f1.add(0, 3, 2);
  CHECK(certify_vd(*one, f1).constant == 1);

  BallFamily bad;
  CHECK_THROWS(bad.add(4, 0, 1));
  CHECK_THROWS(certify_vd(*g, bad));
}

TEST_CASE("certify_vd invariant under measure scaling") {
  auto g = build_gasket(3);
  BallFamily f;
  for (VertexId v = 0; v < g->size(); v += 5) f.add(v, 0.2, 0.1);
  double c = certify_vd(*g, f).constant;
  for (double lam : {0.1, 3.0, 17.0}) {
    auto h = g->scaled(lam, 1.0);
    CHECK(certify_vd(h, f).constant == doctest::Approx(c).epsilon(1e-13));
  }
}

TEST_CASE("certify_rvd examples") {
  auto g = build_path(16);
  auto rep = certify_rvd(*g, {{8, 2, 8, 2}});
  CHECK(rep.constant == 1);

  std::vector<double> radii{1.5, 2.5, 3.5, 4.5, 5.5, 6.5, 7.5};
  auto fit = certify_rvd(*g, nested_rvd_family(8, radii));
  CHECK(std::abs(fit.values.at("nu0") - 1.0) <= 0.15);

  // a ball covering the graph is skipped and flagged
  auto whole = certify_rvd(*g, {{8, 20, 8, 2}, {8, 4, 8, 2}});
  CHECK(whole.values.at("skipped") == 1);
  CHECK(!whole.notes.empty());

  auto gas = build_gasket(4);
  std::vector<double> gr{1.0 / 16, 1.0 / 8, 1.0 / 4};
  CHECK(certify_rvd(*gas, nested_rvd_family(gas->center_vertex(), gr)).values.at("nu0") > 0);
}

TEST_CASE("verify_psi examples") {
  auto sq = ScalingFunction::power(2);
  auto rep = verify_psi(sq, psi_samples(0.01, 10, 15));
  CHECK(rep.status == Status::pass);
  CHECK(rep.constant == doctest::Approx(1.0));

  auto gas = ScalingFunction::parse("gasket");
  CHECK(gas.beta1() == doctest::Approx(std::log(5.0) / std::log(2.0)));
  auto rg = verify_psi(gas, psi_samples(0.01, 1, 20));
  CHECK(rg.status == Status::pass);
  CHECK(rg.constant == doctest::Approx(1.0));

  std::vector<double> r, v;
  for (double x = 0.125; x <= 8.0 + 1e-12; x *= 2) {
    r.push_back(x);
    v.push_back(x < 1 ? x * x : x * x * x);
  }
  auto ok = ScalingFunction::tabulated(r, v, 2, 3);
  CHECK(verify_psi(ok, psi_samples(0.125, 8, 13)).status == Status::pass);
  auto tight = ScalingFunction::tabulated(r, v, 2, 2);
  auto bad = verify_psi(tight, psi_samples(0.125, 8, 13));
  CHECK(bad.status == Status::infeasible);
  CHECK(bad.witness.at("side") == "upper");

  CHECK_THROWS(verify_psi(ScalingFunction::power(1.5), psi_samples(0.1, 1, 4)));
  CHECK_THROWS(ScalingFunction::tabulated({1, 2, 3}, {1, 3, 2}, 2, 2));
}

TEST_CASE("power Psi: C_Psi = 1 on random sample sets, inverse round trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> B(2, 4), L(-6, 6);
  for (int k = 0; k < 20; ++k) {
    auto psi = ScalingFunction::power(B(rng), std::exp(L(rng) / 3));
    std::vector<std::pair<double, double>> s;
    for (int i = 0; i < 30; ++i) {
      double a = std::exp(L(rng)), b = std::exp(L(rng));
      if (a == b) continue;
      s.emplace_back(std::min(a, b), std::max(a, b));
    }
    CHECK(verify_psi(psi, s).status == Status::pass);
    for (auto [a, b] : s) {
      CHECK(psi.inverse(psi(a)) == doctest::Approx(a).epsilon(1e-12));
      CHECK(psi(a) < psi(b));
    }
  }
  CHECK(ScalingFunction::power(2)(0) == 0);
}

TEST_CASE("graph json round trip") {
  auto g = build_gasket(2);
  auto h = graph_from_json(graph_to_json(*g));
  CHECK(h->size() == g->size());
  CHECK(h->edges().size() == g->edges().size());
  CHECK((h->distances() - g->distances()).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((h->measure() - g->measure()).cwiseAbs().maxCoeff() == 0);
}
