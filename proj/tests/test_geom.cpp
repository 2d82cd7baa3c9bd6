#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "hklab/families.hpp"
#include "hklab/geometry.hpp"
#include "hklab/poincare.hpp"

using namespace hklab;

namespace {

GraphPtr G(const std::string& s) { return build_space(SpaceSpec::parse(s)); }

double rayleigh_pi(const MetricMeasureGraph& g, const VertexSet& B, const Vec& f) {
  auto in = indicator_mask(g.size(), B);
  double m = 0, V = 0;
  for (auto v : B) {
    m += f[static_cast<Eigen::Index>(v)] * g.measure()[static_cast<Eigen::Index>(v)];
    V += g.measure()[static_cast<Eigen::Index>(v)];
  }
  m /= V;
  double var = 0, en = 0;
  for (auto v : B) var += std::pow(f[static_cast<Eigen::Index>(v)] - m, 2) * g.measure()[static_cast<Eigen::Index>(v)];
  for (const auto& e : g.edges())
    if (in[e.a] && in[e.b]) en += e.conductance * std::pow(f[static_cast<Eigen::Index>(e.a)] - f[static_cast<Eigen::Index>(e.b)], 2);
  return var / en;
}

}  // namespace

TEST_CASE("strong PI on a single edge") {
  auto g = G("path:1");
  ReferenceForm form(g);
  auto Psi = ScalingFunction::power(2);
  auto rep = certify_pi(*g, form, Psi, {0, 1.0, 0.5});
  // f = (1,-1): variance 2, energy 4 (one edge, w = 1, difference 2)
  CHECK(rep.constant == doctest::Approx(0.5 / Psi(1.5)).epsilon(1e-12));
  Vec f(2);
  f << 1, -1;
  CHECK(rayleigh_pi(*g, {0, 1}, f) == doctest::Approx(0.5));
  CHECK(rayleigh_pi(*g, {0, 1}, Vec::Ones(2) + 1e-9 * f) <= 0.5 + 1e-9);
}

TEST_CASE("strong PI: eigen route vs Rayleigh sweep, disconnection, scaling") {
  auto g = G("gasket:3");
  ReferenceForm form(g);
  auto Psi = ScalingFunction::parse("gasket");
  BallTriple b{g->center_vertex(), 0.25, 0.125};
  auto rep = certify_pi(*g, form, Psi, b);
  REQUIRE(rep.witness_function.has_value());
  auto B = ball(*g, b.center, b.R + b.r);
  CHECK(rayleigh_pi(*g, B, *rep.witness_function) / Psi(b.R + b.r) == doctest::Approx(rep.constant).epsilon(1e-8));
  auto sweep = pi_sweep(*g, form, Psi, b, FunctionFamily{"w", {*rep.witness_function}});
  CHECK(sweep.constant == doctest::Approx(rep.constant).epsilon(1e-8));
  // random members never beat the eigenfunction, and growing the family never lowers the sweep
  Rng rng(3);
  auto fam = random_smooth_family(*g, 16, rng);
  double prev = 0;
  FunctionFamily part{"p", {}};
  for (const auto& f : fam.members) {
    part.members.push_back(f);
    double c = pi_sweep(*g, form, Psi, b, part).constant;
    CHECK(c >= prev);
    CHECK(c <= rep.constant * (1 + 1e-10));
    prev = c;
  }

  auto h = std::make_shared<const MetricMeasureGraph>(g->scaled(7, 7));
  ReferenceForm fh(h);
  CHECK(certify_pi(*h, fh, Psi, b).constant == doctest::Approx(rep.constant).epsilon(1e-10));
  CHECK(certify_pi(*h, fh, Psi, b, PiMode::weak).constant ==
        doctest::Approx(certify_pi(*g, form, Psi, b, PiMode::weak).constant).epsilon(1e-10));
}

TEST_CASE("strong PI disconnected ball is infeasible") {
  // star: 0 - 1, 0 - 2 with 1 and 2 placed close together in the plane, 0 far away
  auto g = graph_from_json(json::parse(R"({"vertices":[{"id":0,"coords":[0,10],"measure":1},{"id":1,"coords":[0,0],"measure":1},{"id":2,"coords":[1,0],"measure":1}],
      "edges":[{"a":0,"b":1,"conductance":1},{"a":0,"b":2,"conductance":1}],"metric":"euclidean","mesh":1})"));
  ReferenceForm form(g);
  auto rep = certify_pi(*g, form, ScalingFunction::power(2), {1, 1.0, 0.5});
  CHECK(rep.status == Status::infeasible);
  CHECK(!std::isfinite(rep.constant));
  CHECK(!rep.ok());
}

TEST_CASE("strong PI level stability on the gasket") {
  auto Psi = ScalingFunction::parse("gasket");
  std::vector<double> c;
  for (int m : {3, 4}) {
    auto g = build_gasket(m);
    ReferenceForm form(g);
    c.push_back(certify_pi(*g, form, Psi, {g->center_vertex(), 0.25, 0.125}).constant);
  }
  CHECK(std::max(c[0], c[1]) / std::min(c[0], c[1]) <= 2.0);
}

TEST_CASE("weighted PI") {
  auto edge = G("path:1");
  ReferenceForm fe(edge);
  auto Psi = ScalingFunction::power(2);
  CutoffFunction psi;
  psi.values = Vec(2);
  psi.values << 1, 0.5;
  psi.center = 0;
  psi.R = 1.0;
  psi.r = 0.5;
  // mass diag(1, 1/4), edge weight (1 + 1/4)/2 = 5/8: eigenvalue (5/8)(1 + 4) = 25/8
  auto rep = certify_weighted_pi(*edge, fe, Psi, psi);
  CHECK(rep.values.at("ratio") == doctest::Approx(8.0 / 25).epsilon(1e-12));
  CHECK(rep.constant == doctest::Approx(8.0 / 25 / Psi(1.5)).epsilon(1e-12));

  // psi = 1 on the ball reduces to the strong PI
  auto g = G("gasket:3");
  ReferenceForm form(g);
  auto GP = ScalingFunction::parse("gasket");
  BallTriple b{g->center_vertex(), 0.25, 0.125};
  auto B = ball(*g, b.center, b.R + b.r);
  CutoffFunction one;
  one.values = Vec::Zero(static_cast<Eigen::Index>(g->size()));
  for (auto v : B) one.values[static_cast<Eigen::Index>(v)] = 1;
  one.center = b.center;
  one.R = b.R;
  one.r = b.r;
  CHECK(certify_weighted_pi(*g, form, GP, one).constant ==
        doctest::Approx(certify_pi(*g, form, GP, b).constant).epsilon(1e-10));

  CutoffFunction zero = one;
  zero.values.setZero();
  CHECK_THROWS(certify_weighted_pi(*g, form, GP, zero));
}

TEST_CASE("weighted PI on layered cutoffs: stable across eps") {
  auto g = build_gasket(4);
  auto form = std::make_shared<const ReferenceForm>(g);
  auto Psi = ScalingFunction::parse("gasket");
  Rng rng(5);
  auto fam = random_smooth_family(*g, 16, rng);
  fam.append(random_noise_family(*g, 8, rng));
  VertexId x = g->center_vertex();
  auto lc = measure_layer_constants(*g, *form, Psi, x, 0.25, {0.25, 0.125, 0.0625}, fam);
  std::vector<double> c;
  for (double eps : {0.25, 0.125}) {
    auto psi = layered_cutoff(*g, x, 0.25, 0.25, eps, std::max(lc.c1, 1e-12), lc.c2, Psi);
    auto rep = certify_weighted_pi(*g, *form, Psi, psi);
    CHECK(std::isfinite(rep.constant));
    c.push_back(rep.constant);
  }
  CHECK(std::max(c[0], c[1]) / std::min(c[0], c[1]) <= 2.0);
}

TEST_CASE("pseudo PI") {
  auto g = G("path:32");
  ReferenceForm form(g);
  auto Psi = ScalingFunction::power(2);
  Vec tent = Vec::Zero(33);
  for (int i = 10; i <= 22; ++i) tent[i] = 6 - std::abs(i - 16);
  auto rep = certify_pseudo_pi(*g, form, Psi, 16, 8, {4}, FunctionFamily{"tent", {tent}});
  // brute force: open ball averages of radius 4 are 7-point windows, truncated at the ends
  Vec avg(33);
  for (int y = 0; y <= 32; ++y) {
    double s = 0;
    int n = 0;
    for (int z = std::max(0, y - 3); z <= std::min(32, y + 3); ++z) s += tent[z], ++n;
    avg[y] = s / n;
  }
  double e = 0;
  for (int i = 0; i < 32; ++i) e += std::pow(tent[i + 1] - tent[i], 2);
  double expect = (tent - avg).squaredNorm() / (16 * e);
  CHECK(rep.constant == doctest::Approx(expect).epsilon(1e-12));

  // s beyond the diameter: averages are the global mean
  Vec a = ball_average(*g, tent, 100);
  CHECK((a.array() - tent.mean()).abs().maxCoeff() <= 1e-12);

  // constant bump strictly inside: finite, driven by the boundary ring
  Vec bump = Vec::Zero(33);
  for (int i = 12; i <= 20; ++i) bump[i] = 1;
  auto rb = certify_pseudo_pi(*g, form, Psi, 16, 8, {2}, FunctionFamily{"bump", {bump}});
  CHECK(std::isfinite(rb.constant));
  CHECK(rb.constant > 0);
  Vec avg2 = ball_average(*g, bump, 2);
  CHECK(avg2[16] == 1);

  CHECK_THROWS(certify_pseudo_pi(*g, form, Psi, 16, 8, {}, FunctionFamily{"tent", {tent}}));
}

TEST_CASE("Sobolev") {
  auto g = G("path:16");
  ReferenceForm form(g);
  auto Psi = ScalingFunction::power(2);
  Vec bump = Vec::Zero(17);
  bump[8] = 1;
  const double V = volume(*g, 8, 4);
  for (double k : {1.5, 2.0, 3.0}) {
    auto rep = certify_sobolev(*g, form, Psi, 8, 4, k, FunctionFamily{"b", {bump}});
    // int |f|^{2k} = 1, energy 2 (two unit edges)
    CHECK(rep.constant == doctest::Approx(std::pow(V, 1 - 1 / k) / (2 * Psi(4))).epsilon(1e-12));
  }
  // kappa -> 1+: Faber-Krahn quotient
  Rng rng(1);
  auto fam = restrict_family(random_smooth_family(*g, 4, rng), *g, ball(*g, 8, 4));
  for (const auto& f : fam.members) {
    auto rep = certify_sobolev(*g, form, Psi, 8, 4, 1.0001, FunctionFamily{"f", {f}});
    double fk = f.squaredNorm() / (Psi(4) * energy(form, f, f));
    CHECK(rep.constant == doctest::Approx(fk).epsilon(1e-3));
  }
  CHECK_THROWS(certify_sobolev(*g, form, Psi, 8, 4, 1.0, FunctionFamily{"b", {bump}}));
  CHECK_THROWS(certify_sobolev(*g, form, Psi, 8, 4, std::nullopt, FunctionFamily{"b", {bump}}));
  // kappa from the measured C_VD
  auto r = certify_sobolev(*g, form, Psi, 8, 4, std::nullopt, FunctionFamily{"b", {bump}}, 3.0);
  CHECK(r.values.at("kappa") == doctest::Approx(sobolev_kappa(3.0, 2.0)));
  // whole-graph ball: constants have zero energy
  auto whole = certify_sobolev(*g, form, Psi, 8, 100, 2.0, FunctionFamily{"b", {bump}});
  CHECK(!whole.notes.empty());
  CHECK_THROWS(certify_sobolev(*g, form, Psi, 8, 100, 2.0, FunctionFamily{"c", {Vec::Ones(17)}}));
}

TEST_CASE("Sobolev level stability on the gasket, scaling invariance") {
  auto Psi = ScalingFunction::parse("gasket");
  std::vector<double> c;
  for (int m : {3, 4}) {
    auto g = build_gasket(m);
    auto form = std::make_shared<const ReferenceForm>(g);
    VertexId x = g->center_vertex();
    BallFamily bf;
    for (VertexId v = 0; v < g->size(); ++v) bf.add(v, 0.25, 0.125);
    double kappa = sobolev_kappa(certify_vd(*g, bf).constant, Psi.beta1());
    auto fam = dirichlet_eigen_family(*form, x, 0.25, 4);
    auto rep = certify_sobolev(*g, *form, Psi, x, 0.25, kappa, fam);
    CHECK(std::isfinite(rep.constant));
    c.push_back(rep.constant);
    if (m == 3) {
      auto h = std::make_shared<const MetricMeasureGraph>(g->scaled(7, 7));
      ReferenceForm fh(h);
      CHECK(certify_sobolev(*h, fh, Psi, x, 0.25, kappa, fam).constant == doctest::Approx(rep.constant).epsilon(1e-10));
      auto pp = certify_pseudo_pi(*g, *form, Psi, x, 0.25, {0.125, 0.25}, fam);
      CHECK(certify_pseudo_pi(*h, fh, Psi, x, 0.25, {0.125, 0.25}, fam).constant == doctest::Approx(pp.constant).epsilon(1e-10));
    }
  }
  CHECK(std::max(c[0], c[1]) / std::min(c[0], c[1]) <= 2.0);
}
