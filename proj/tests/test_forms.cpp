#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "hklab/assumptions.hpp"
#include "hklab/families.hpp"

using namespace hklab;

namespace {

FormPtr make_form(const std::string& spec) { return std::make_shared<const ReferenceForm>(build_space(SpaceSpec::parse(spec))); }

Vec random_vec(std::size_t n, Rng& rng) {
  Vec v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

Vec unit(std::size_t n, std::size_t i) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(n));
  v[static_cast<Eigen::Index>(i)] = 1;
  return v;
}

// edge-by-edge sums, no matrices
double edge_energy(const MetricMeasureGraph& g, const Vec& f, const Vec& h) {
  double s = 0;
  for (const auto& e : g.edges()) {
    auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    s += e.conductance * (f[a] - f[b]) * (h[a] - h[b]);
  }
  return s;
}

// sum_x g(x) Gamma(f,h)(x) mu(x) straight from the density definition
double gamma_pair(const MetricMeasureGraph& g, const Vec& weight, const Vec& f, const Vec& h) {
  double s = 0;
  for (VertexId x = 0; x < g.size(); ++x)
    for (const auto& nb : g.neighbors(x)) {
      auto a = static_cast<Eigen::Index>(x), b = static_cast<Eigen::Index>(nb.v);
      s += weight[a] * 0.5 * nb.w * (f[a] - f[b]) * (h[a] - h[b]);
    }
  return s;
}

Mat mass(const MetricMeasureGraph& g) { return g.measure().asDiagonal(); }

}  // namespace

TEST_CASE("energy examples") {
  auto form = make_form("path:2");
  Vec f(3);
  f << 0, 1, 2;
  CHECK(energy(*form, f, f) == 2);
  CHECK(energy(*form, Vec::Constant(3, 5.0), f) == 0);
  auto edge = make_form("path:1");
  CHECK(energy(*edge, unit(2, 0), unit(2, 0)) == 1);
  CHECK_THROWS(energy(*form, Vec::Zero(2), f));
}

TEST_CASE("energy measure examples") {
  auto edge = make_form("path:1");
  Vec f(2);
  f << 0, 1;
  Vec G = energy_measure(*edge, f, f);
  CHECK(G[0] == 0.5);
  CHECK(G[1] == 0.5);
  CHECK(energy_measure(*edge, Vec::Constant(2, 3.0), f).cwiseAbs().maxCoeff() == 0);
  auto form = make_form("gasket:2");
  Rng rng(3);
  Vec u = random_vec(form->size(), rng);
  CHECK((energy_measure(*form, u, 2 * u) - 2 * energy_measure(*form, u, u)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("form invariants on random functions") {
  for (auto spec : {"gasket:3", "path:16", "grid:5"}) {
    auto form = make_form(spec);
    const auto& g = form->graph();
    Rng rng(5);
    const Vec one = Vec::Ones(static_cast<Eigen::Index>(g.size()));
    for (int k = 0; k < 20; ++k) {
      Vec f = random_vec(g.size(), rng), h = random_vec(g.size(), rng);
      double e = energy(*form, f, h);
      CHECK(e == doctest::Approx(edge_energy(g, f, h)).epsilon(1e-12));
      CHECK(e == doctest::Approx(energy(*form, h, f)).epsilon(1e-12));
      CHECK(energy(*form, f, f) >= 0);
      CHECK(std::abs(energy(*form, one, f)) <= 1e-12 * (1 + f.cwiseAbs().sum()));
      Vec G = energy_measure(*form, f, h);
      CHECK(G.dot(g.measure()) == doctest::Approx(e).epsilon(1e-12).scale(1));
      Vec Gf = energy_measure(*form, f, f), Gh = energy_measure(*form, h, h);
      for (Eigen::Index x = 0; x < G.size(); ++x) {
        CHECK(Gf[x] >= 0);
        CHECK(std::abs(G[x]) <= std::sqrt(Gf[x] * Gh[x]) * (1 + 1e-12) + 1e-300);
      }
      // int dGamma(fh,fh) <= 2 int f^2 dGamma(h,h) + 2 int h^2 dGamma(f,f)
      Vec fh = f.cwiseProduct(h);
      double lhs = energy(*form, fh, fh);
      double rhs = 2 * weighted_energy(*form, f.cwiseProduct(f), h, h) + 2 * weighted_energy(*form, h.cwiseProduct(h), f, f);
      CHECK(lhs <= rhs * (1 + 1e-12));
    }
  }
}

TEST_CASE("energy scaling in conductance and measure") {
  auto g = build_gasket(2);
  Rng rng(9);
  Vec f = random_vec(g->size(), rng);
  ReferenceForm base(g);
  ReferenceForm twice_w(std::make_shared<const MetricMeasureGraph>(g->scaled(1.0, 2.0)));
  ReferenceForm twice_mu(std::make_shared<const MetricMeasureGraph>(g->scaled(2.0, 1.0)));
  CHECK(energy(twice_w, f, f) == doctest::Approx(2 * energy(base, f, f)).epsilon(1e-14));
  CHECK(energy(twice_mu, f, f) == doctest::Approx(energy(base, f, f)).epsilon(1e-14));
  CHECK(f.cwiseProduct(f).dot(twice_mu.graph().measure()) == doctest::Approx(2 * f.cwiseProduct(f).dot(g->measure())));
}

TEST_CASE("chain rule defect examples") {
  auto edge = make_form("path:1");
  Vec u(2);
  u << 0, 1;
  CHECK(chain_rule_defect(*edge, ScalarMap::affine(3), u, u) == doctest::Approx(0).scale(1));
  CHECK(chain_rule_defect(*edge, ScalarMap::square(), u, u) == doctest::Approx(1.0));

  // refinement: same ambient u, v on gasket levels 2 and 4
  double prev = INFINITY;
  for (int m : {2, 4}) {
    auto form = std::make_shared<const ReferenceForm>(build_gasket(m));
    auto amb = ambient_family(form->graph());
    double d = chain_rule_defect(*form, ScalarMap::smooth_default(), amb.members[5], amb.members[4]);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("harmonic profile examples") {
  auto path = make_form("path:4");
  Vec vals(2);
  vals << 0, 1;
  auto p = harmonic_profile(*path, {0, 4}, vals);
  Vec expect(5);
  expect << 0, 0.25, 0.5, 0.75, 1;
  CHECK((p.h - expect).cwiseAbs().maxCoeff() <= 1e-14);

  Vec c(2);
  c << 0.7, 0.7;
  auto pc = harmonic_profile(*path, {0, 4}, c);
  CHECK((pc.h.array() - 0.7).abs().maxCoeff() <= 1e-14);
  CHECK(pc.c_h_prime == doctest::Approx(0).scale(1));

  Vec neg(2);
  neg << -1, 1;
  CHECK_THROWS(harmonic_profile(*path, {0, 4}, neg));
  CHECK_THROWS(harmonic_profile(*path, {}, Vec()));
}

TEST_CASE("gasket harmonic extension: 2/5 and 1/5 weights") {
  auto f2 = make_form("gasket:2");
  const auto& g = f2->graph();
  auto [bnd, vals] = default_boundary(g);
  REQUIRE(bnd.size() == 3);
  auto p = harmonic_profile(*f2, bnd, vals);
  CHECK(p.h.minCoeff() >= 0);

  // corner coordinates and values; level-1 points are edge midpoints
  std::vector<std::vector<double>> P;
  std::vector<double> v;
  for (std::size_t i = 0; i < 3; ++i) {
    P.push_back(g.coords()[bnd[i]]);
    v.push_back(vals[static_cast<Eigen::Index>(i)]);
  }
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    std::vector<double> mid{(P[i][0] + P[j][0]) / 2, (P[i][1] + P[j][1]) / 2};
    VertexId m = g.nearest_vertex(mid);
    CHECK(p.h[static_cast<Eigen::Index>(m)] == doctest::Approx(0.4 * v[i] + 0.4 * v[j] + 0.2 * v[k]).epsilon(1e-12));
  }

  // brute-force level-1 Dirichlet solve, assembled here by hand
  auto g1 = build_gasket(1);
  auto [b1, v1] = default_boundary(*g1);
  const auto n = static_cast<Eigen::Index>(g1->size());
  Mat L = Mat::Zero(n, n);
  Vec rhs = Vec::Zero(n);
  std::vector<char> is_b(g1->size(), 0);
  for (std::size_t i = 0; i < b1.size(); ++i) is_b[b1[i]] = 1;
  for (const auto& e : g1->edges())
    for (auto [a, b] : {std::pair{e.a, e.b}, std::pair{e.b, e.a}}) {
      if (is_b[a]) continue;
      L(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += e.conductance;
      L(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) -= e.conductance;
    }
  for (std::size_t i = 0; i < b1.size(); ++i) {
    auto a = static_cast<Eigen::Index>(b1[i]);
    L(a, a) = 1;
    rhs[a] = v1[static_cast<Eigen::Index>(i)];
  }
  Vec h1 = L.fullPivLu().solve(rhs);
  auto p1 = harmonic_profile(ReferenceForm(g1), b1, v1);
  CHECK((p1.h - h1).cwiseAbs().maxCoeff() <= 1e-12);
  for (VertexId x = 0; x < g1->size(); ++x) {
    VertexId y = g.nearest_vertex(g1->coords()[x]);
    CHECK(p.h[static_cast<Eigen::Index>(y)] == doctest::Approx(h1[static_cast<Eigen::Index>(x)]).epsilon(1e-12));
  }
}

TEST_CASE("nonsymmetric schedule identities") {
  auto form = make_form("path:4");
  Vec vals(2);
  vals << 0, 1;
  auto prof = harmonic_profile(*form, {0, 4}, vals);
  auto s0 = build_nonsymmetric(form, prof, 0.0);
  auto s1 = build_nonsymmetric(form, prof, 1.0);
  CHECK((s0.form_matrix(0) - form->dense_energy()).cwiseAbs().maxCoeff() == 0);
  CHECK(s0.symmetric());
  CHECK(!s1.symmetric());

  Vec f = unit(5, 2), g = unit(5, 3);
  const auto& G = form->graph();
  double def = gamma_pair(G, g, f, prof.h) - gamma_pair(G, f, g, prof.h);
  CHECK(s1.evaluate(0, f, g) - s1.evaluate(0, g, f) == doctest::Approx(2 * def).epsilon(1e-12));

  Rng rng(4);
  for (auto spec : {"path:16", "gasket:3"}) {
    auto fm = make_form(spec);
    auto [b, v] = default_boundary(fm->graph());
    auto pr = harmonic_profile(*fm, b, v);
    for (double lam : {0.5, 1.0, 3.0}) {
      auto s = build_nonsymmetric(fm, pr, lam);
      Vec lh = lam * pr.h;
      for (int k = 0; k < 10; ++k) {
        Vec a = random_vec(fm->size(), rng), c = random_vec(fm->size(), rng);
        double scale = 1 + std::abs(energy(*fm, a, a)) + std::abs(energy(*fm, c, c));
        // E(f,f) = E*(f,f)
        CHECK(std::abs(s.evaluate(0, a, a) - energy(*fm, a, a)) <= 1e-12 * scale);
        // E(f,g) = E*(f,g) + sum g Gamma(f,h) mu - sum f Gamma(g,h) mu
        double expect = edge_energy(fm->graph(), a, c) + gamma_pair(fm->graph(), c, a, lh) - gamma_pair(fm->graph(), a, c, lh);
        CHECK(std::abs(s.evaluate(0, a, c) - expect) <= 1e-12 * scale * (1 + lam));
        auto d = decompose(s, 0);
        CHECK(std::abs(d.sym(a, c) - energy(*fm, a, c)) <= 1e-12 * scale);
        CHECK(std::abs(d.skew(a, a)) <= 1e-12 * scale);
        double sum = d.es(a, c) + d.sym_boundary(a, c) + d.l(a, c) + d.r(a, c);
        CHECK(std::abs(sum - d.full(a, c)) <= 1e-10 * scale * (1 + lam));
        CHECK(std::abs(d.r(a, c) + d.l(c, a)) <= 1e-12 * scale * (1 + lam));
        // l(f,g) = sum g Gamma(f,h) mu for this construction
        CHECK(std::abs(d.l(a, c) - gamma_pair(fm->graph(), c, a, lh)) <= 1e-12 * scale * (1 + lam));
      }
    }
  }
  auto other = make_form("path:8");
  CHECK_THROWS(build_nonsymmetric(other, prof, 1.0));
}

TEST_CASE("lambda = 0 decomposition: l = r = 0, E^s = E*") {
  auto form = make_form("gasket:2");
  auto s = reference_schedule(form);
  auto d = decompose(s, 0);
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    Vec a = random_vec(form->size(), rng), c = random_vec(form->size(), rng);
    CHECK(std::abs(d.l(a, c)) <= 1e-12);
    CHECK(std::abs(d.r(a, c)) <= 1e-12);
    CHECK(d.es(a, c) + d.sym_boundary(a, c) == doctest::Approx(energy(*form, a, c)).epsilon(1e-12));
  }
}

TEST_CASE("schedule time span and json round trip") {
  auto form = make_form("path:8");
  auto [b, v] = default_boundary(form->graph());
  auto pr = harmonic_profile(*form, b, v);
  auto s = build_time_dependent(form, {{0, 1, pr, 1.0}, {1, 2, pr, -0.5}});
  CHECK(s.window_count() == 2);
  CHECK_THROWS(s.evaluate(3, Vec::Ones(9), Vec::Ones(9)));
  CHECK_THROWS(decompose(s, -1));
  auto back = schedule_from_json(form, schedule_to_json(s));
  CHECK((back.form_matrix(1) - s.form_matrix(1)).cwiseAbs().maxCoeff() == 0);
  auto p2 = profile_from_json(*form, profile_to_json(pr));
  CHECK((p2.h - pr.h).cwiseAbs().maxCoeff() == 0);
}

TEST_CASE("assumption 0") {
  auto form = make_form("path:8");
  Rng rng(21);
  auto fam = random_smooth_family(form->graph(), 16, rng);
  auto rep0 = verify_assumption0(reference_schedule(form), fam);
  // E = E*, norm E*(f,f) + |f|^2: c = 1 forces alpha = 1
  CHECK(rep0.values.at("alpha") == doctest::Approx(1.0));
  CHECK(rep0.values.at("c") == doctest::Approx(1.0));
  CHECK(rep0.values.at("sandwich_C") == doctest::Approx(1.0));
  // C* for E = E*: top generalized eigenvalue of (K, K + M)
  const Mat K = form->dense_energy();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(K, K + mass(form->graph()));
  CHECK(rep0.values.at("C_star") == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-9));
  CHECK(rep0.ok());

  auto [b, v] = default_boundary(form->graph());
  auto pr = harmonic_profile(*form, b, v);
  double prev_alpha = 0, prev_cstar = 0;
  for (double lam : {1.0, 2.0, 4.0}) {
    auto rep = verify_assumption0(build_nonsymmetric(form, pr, lam), fam);
    CHECK(rep.status == Status::pass);
    double alpha = rep.values.at("alpha");
    CHECK(alpha >= prev_alpha);
    CHECK(rep.values.at("C_star") > prev_cstar);
    prev_alpha = alpha;
    prev_cstar = rep.values.at("C_star");
  }

  // product rule with affine u, f, v on the path. The defect is
  // -sum_x v(x) (1/2) sum_y w du df dh; the three odd increments cancel at interior
  // vertices, so only the two endpoints contribute.
  Vec x(9);
  for (int i = 0; i < 9; ++i) x[i] = i;
  Vec u = 2 * x, f = x + Vec::Ones(9), vv = (3 - x.array()).matrix();
  auto d = decompose(build_nonsymmetric(form, pr, 1.0), 0);
  const auto& G = form->graph();
  double oracle = 0;
  for (VertexId a = 0; a < G.size(); ++a)
    for (const auto& nb : G.neighbors(a)) {
      auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(nb.v);
      oracle -= vv[i] * 0.5 * nb.w * (u[i] - u[j]) * (f[i] - f[j]) * (pr.h[i] - pr.h[j]);
    }
  CHECK(product_rule_defect(d, u, f, vv) == doctest::Approx(oracle).epsilon(1e-12));
  Vec vin = vv;
  vin[0] = vin[8] = 0;
  CHECK(std::abs(product_rule_defect(d, u, f, vin)) <= 1e-12);
  CHECK_THROWS(verify_assumption0(reference_schedule(form), FunctionFamily{}));
}

TEST_CASE("skew assumptions") {
  auto form = make_form("gasket:3");
  const auto& g = form->graph();
  auto Psi = ScalingFunction::parse("gasket");
  Rng rng(2);
  auto fam = random_smooth_family(g, 16, rng);
  auto cfam = fam;
  cfam.append(random_noise_family(g, 8, rng));
  const VertexId x = g.center_vertex();
  auto lc = measure_layer_constants(g, *form, Psi, x, 0.25, {0.25, 0.125}, cfam);
  auto psi = layered_cutoff(g, x, 0.25, 0.25, 0.125, std::max(lc.c1, 1e-12), lc.c2, Psi);
  attach_csa(*form, psi, Psi, cfam);
  auto pos = positive_family(fam);

  auto zero = verify_skew_assumptions(reference_schedule(form), {psi}, Psi, pos);
  REQUIRE(zero.size() == 3);
  for (const auto& r : zero) {
    CHECK(r.status == Status::pass);
    CHECK(r.constant == doctest::Approx(0).scale(1));
  }

  auto [b, v] = default_boundary(g);
  auto pr = harmonic_profile(*form, b, v);
  std::vector<std::vector<double>> c;
  for (double lam : {0.5, 1.0, 2.0}) {
    auto reps = verify_skew_assumptions(build_nonsymmetric(form, pr, lam), {psi}, Psi, pos);
    std::vector<double> row;
    for (const auto& r : reps) {
      CHECK(std::isfinite(r.constant));
      row.push_back(r.constant / lam);
    }
    c.push_back(row);
  }
  for (int k = 0; k < 3; ++k) {
    CHECK(c[0][k] == doctest::Approx(c[1][k]).epsilon(1e-8));
    CHECK(c[2][k] == doctest::Approx(c[1][k]).epsilon(1e-8));
  }

  // f = 1 alone: E^sym(psi^2,1) = 0 and the two skew terms coincide in size,
  // so the one-row LP gives lhs / max(b, c)
  auto s1 = build_nonsymmetric(form, pr, 1.0);
  FunctionFamily ones{"one", {Vec::Ones(static_cast<Eigen::Index>(g.size()))}};
  auto r1 = verify_skew_assumptions(s1, {psi}, Psi, ones);
  auto d = decompose(s1, window_times(s1)[0]);
  Vec psi2 = psi.values.cwiseProduct(psi.values), one = ones.members[0];
  double lhs = 2 * std::abs(0.5 * (s1.evaluate(0, psi2, one) - s1.evaluate(0, one, psi2)));
  double C1 = *psi.c0 * std::pow(*psi.epsilon, (1 - Psi.beta2()) / 2);
  double VB = volume(g, x, psi.R + psi.r);
  double coef = std::max(C1 / Psi(psi.r) * VB, C1 * VB);
  CHECK(r1[0].constant == doctest::Approx(lhs / coef).epsilon(1e-9));
  CHECK(std::abs(d.sym(psi2, one)) <= 1e-12);

  // assumption 2 needs positive functions
  FunctionFamily zero_f{"z", {Vec::Zero(static_cast<Eigen::Index>(g.size()))}};
  CHECK_THROWS(verify_skew_assumptions(s1, {psi}, Psi, zero_f));
  auto bare = plateau_cutoff(g, x, 0.25, 0.25);
  CHECK_THROWS(verify_skew_assumptions(s1, {bare}, Psi, pos));
}
