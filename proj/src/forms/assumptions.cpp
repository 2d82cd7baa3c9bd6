#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hklab/assumptions.hpp"
#include "hklab/util.hpp"

namespace hklab {

std::vector<double> window_times(const FormSchedule& s) {
  std::vector<double> out;
  for (const auto& w : s.windows()) {
    if (std::isfinite(w.begin) && std::isfinite(w.end))
      out.push_back(0.5 * (w.begin + w.end));
    else if (std::isfinite(w.begin))
      out.push_back(w.begin + 1.0);
    else if (std::isfinite(w.end))
      out.push_back(w.end - 1.0);
    else
      out.push_back(0.0);
  }
  return out;
}

double product_rule_defect(const Decomposition& d, const Vec& u, const Vec& f, const Vec& v) {
  return d.l(u.cwiseProduct(f), v) - d.l(u, f.cwiseProduct(v)) - d.l(f, u.cwiseProduct(v));
}

double product_rule_defect_l1(const Decomposition& d, const Vec& u, const Vec& f, const Vec& v) {
  Vec r = d.l_density(u.cwiseProduct(f)) - f.cwiseProduct(d.l_density(u)) - u.cwiseProduct(d.l_density(f));
  return v.cwiseAbs().dot(r.cwiseAbs());
}

double l_chain_rule_defect_l1(const Decomposition& d, const ScalarMap& phi, const Vec& u, const Vec& v) {
  Vec r = d.l_density(phi.apply(u)) - phi.apply_derivative(u).cwiseProduct(d.l_density(u));
  return v.cwiseAbs().dot(r.cwiseAbs());
}

namespace {
// largest eigenvalue of A x = lambda M x for diagonal M > 0
double max_gen_eig_diag(const Mat& A, const Vec& mu) {
  Vec s = mu.cwiseSqrt().cwiseInverse();
  Mat S = s.asDiagonal() * (0.5 * (A + A.transpose())) * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}
}  // namespace

CertReport verify_assumption0(const FormSchedule& schedule, const FunctionFamily& family, std::vector<double> times) {
  if (family.empty()) throw Error("verify_assumption0: empty family");
  if (times.empty()) times = window_times(schedule);
  const auto& form = schedule.reference();
  const Vec& mu = form.graph().measure();
  const Mat& K = form.dense_energy();
  Mat KM = K;
  KM.diagonal() += mu;
  Eigen::LLT<Mat> llt(KM);
  require(llt.info() == Eigen::Success, "verify_assumption0: K + M not positive definite");
  const Mat L = llt.matrixL();

  CertReport rep;
  rep.inequality = "assumption0";
  rep.family = family.id;
  rep.provenance = "exact operator norm and generalized eigenvalues; family sweep for (iii) and l rules";

  double cstar = 0.0;
  std::vector<double> cgrid;
  for (int k = 1; k <= 20; ++k) cgrid.push_back(0.05 * k);
  std::vector<double> alpha_c(cgrid.size(), -INFINITY);
  double sandwich = 1.0;
  double prod = 0.0, chain = 0.0;
  const ScalarMap phi = ScalarMap::smooth_default();
  for (double t : times) {
    const Mat& B = schedule.form_matrix_at(t);
    Mat X = L.triangularView<Eigen::Lower>().solve(B);
    Mat Y = L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
    Eigen::JacobiSVD<Mat> svd(Y);
    cstar = std::max(cstar, svd.singularValues()(0));

    Mat Bsym = 0.5 * (B + B.transpose());
    for (std::size_t i = 0; i < cgrid.size(); ++i)
      alpha_c[i] = std::max(alpha_c[i], max_gen_eig_diag(cgrid[i] * KM - Bsym, mu));

    Decomposition d(B);
    const std::size_t n = family.size();
    for (std::size_t k = 0; k < n; ++k) {
      const Vec& f = family.members[k];
      double e = f.dot(K * f);
      double es = d.es(f, f);
      if (e > 1e-14 * std::max(1.0, f.squaredNorm())) {
        if (es <= 0)
          sandwich = INFINITY;
        else
          sandwich = std::max(sandwich, std::max(es / e, e / es));
      }
      const Vec& g = family.members[(k + 1) % n];
      const Vec& v = family.members[(k + 2) % n];
      prod = std::max(prod, product_rule_defect_l1(d, f, g, v));
      chain = std::max(chain, l_chain_rule_defect_l1(d, phi, f, v));
    }
  }
  // c <= alpha is part of the assumption; pick the smallest alpha - c, ties to the largest c
  double best_gap = INFINITY, alpha = 0, c = 0;
  for (std::size_t i = 0; i < cgrid.size(); ++i) {
    double a = std::max(alpha_c[i], cgrid[i]);
    double gap = a - cgrid[i];
    if (gap < best_gap - 1e-12 || (std::abs(gap - best_gap) <= 1e-12 && cgrid[i] > c)) {
      best_gap = gap;
      alpha = a;
      c = cgrid[i];
    }
  }
  rep.constant = cstar;
  rep.values["C_star"] = cstar;
  rep.values["sandwich_C"] = sandwich;
  rep.values["alpha"] = alpha;
  rep.values["c"] = c;
  rep.values["alpha_minus_c"] = alpha - c;
  rep.values["C10"] = 1.0;
  rep.values["product_rule_defect"] = prod;
  rep.values["l_chain_rule_defect"] = chain;
  rep.notes.push_back("(ii) has no finite-dimensional content beyond continuity; automatically satisfied");
  rep.notes.push_back("C10 = 1: the symmetric part of every window equals the reference form");
  for (double t : times) {
    const Mat& B = schedule.form_matrix_at(t);
    if ((0.5 * (B + B.transpose()) - schedule.reference().dense_energy()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(1.0, B.cwiseAbs().maxCoeff())) {
      rep.values["C10"] = NAN;
      rep.notes.back() = "C10 not derived: symmetric part differs from the reference form";
      break;
    }
  }
  rep.status = std::isfinite(cstar) && std::isfinite(sandwich) ? Status::pass : Status::infeasible;
  return rep;
}

namespace {
struct Row {
  double a, b, c, lhs;
  json where;
};

CertReport solve_bundle(const std::string& name, const std::array<std::string, 3>& keys, const std::vector<Row>& rows,
                        const std::string& family) {
  CertReport rep;
  rep.inequality = name;
  rep.family = family;
  rep.provenance = "covering LP over sampled (t, cutoff, f)";
  double maxlhs = 0.0;
  for (const auto& r : rows) maxlhs = std::max(maxlhs, r.lhs);
  if (rows.empty() || maxlhs <= 0.0) {
    for (const auto& k : keys) rep.values[k] = 0.0;
    rep.constant = 0.0;
    rep.status = Status::pass;
    rep.notes.push_back("all sampled left sides vanish");
    return rep;
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  Mat A(m, 3);
  Vec b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    A(i, 0) = r.a;
    A(i, 1) = r.b;
    A(i, 2) = r.c;
    b[i] = r.lhs;
  }
  auto lp = solve_covering_lp(A, b, Vec::Ones(3));
  if (!lp.feasible) {
    rep.status = Status::infeasible;
    rep.constant = INFINITY;
    if (lp.infeasible_row) rep.witness = rows[*lp.infeasible_row].where;
    rep.notes.push_back("a sampled inequality has a positive left side and a vanishing right side");
    return rep;
  }
  // binding row: smallest slack relative to its left side
  double tight = INFINITY;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b[i] <= 0) continue;
    double slack = (A.row(i).dot(lp.x) - b[i]) / b[i];
    if (slack < tight) {
      tight = slack;
      rep.witness = rows[static_cast<std::size_t>(i)].where;
    }
  }
  for (int k = 0; k < 3; ++k) rep.values[keys[static_cast<std::size_t>(k)]] = lp.x[k];
  rep.constant = lp.objective;
  rep.status = Status::pass;
  return rep;
}

double ball_mass(const MetricMeasureGraph& g, const CutoffFunction& psi, const Vec& f2) {
  double s = 0;
  for (std::size_t y = 0; y < g.size(); ++y)
    if (g.distance(psi.center, y) < psi.R + psi.r) s += f2[static_cast<Eigen::Index>(y)] * g.measure()[static_cast<Eigen::Index>(y)];
  return s;
}
}  // namespace

std::vector<CertReport> verify_skew_assumptions(const FormSchedule& schedule, const std::vector<CutoffFunction>& cutoffs,
                                                const ScalingFunction& Psi, const FunctionFamily& family,
                                                std::vector<double> times, const std::vector<double>& davies_M) {
  require(!family.empty(), "verify_skew_assumptions: empty family");
  require(!cutoffs.empty(), "verify_skew_assumptions: no cutoffs");
  for (const auto& f : family.members)
    if (!(f.minCoeff() > 0)) throw Error("skew assumption 2 needs uniformly positive test functions");
  if (times.empty()) times = window_times(schedule);
  const auto& form = schedule.reference();
  const auto& g = form.graph();
  const Vec& mu = g.measure();
  const Vec one = Vec::Ones(static_cast<Eigen::Index>(g.size()));
  std::vector<Row> r1, r2, r3;
  for (std::size_t ci = 0; ci < cutoffs.size(); ++ci) {
    const auto& psi = cutoffs[ci];
    require(psi.epsilon && psi.c0, "verify_skew_assumptions: cutoff lacks a certified (eps, C0)");
    require(std::isfinite(*psi.c0), "verify_skew_assumptions: cutoff C0 is infinite");
    const double eps = *psi.epsilon;
    const double C1 = *psi.c0 * std::pow(eps, (1.0 - Psi.beta2()) / 2.0);
    const double Pr = Psi(psi.r);
    const double se = std::sqrt(eps);
    const Vec psi2 = psi.values.cwiseProduct(psi.values);
    const double VB = ball_mass(g, psi, one);
    for (double t : times) {
      Decomposition d = decompose(schedule, t);
      for (std::size_t k = 0; k < family.size(); ++k) {
        const Vec& f = family.members[k];
        const Vec f2 = f.cwiseProduct(f);
        json where = {{"t", t}, {"cutoff", ci}, {"member", k}};
        {
          Vec w = f2.cwiseProduct(psi2);
          double lhs = std::abs(d.sym(w, one)) + std::abs(d.skew(w, one)) + std::abs(d.skew(f, f.cwiseProduct(psi2)));
          double mass = ball_mass(g, psi, f2);
          r1.push_back({se * weighted_energy(form, psi2, f, f), C1 / Pr * mass, C1 * mass, lhs, where});
        }
        {
          double lhs = std::abs(d.skew(f, f.cwiseInverse().cwiseProduct(psi2)));
          Vec lf = f.array().log().matrix();
          r2.push_back({se * weighted_energy(form, psi2, lf, lf), C1 / Pr * VB, C1 * VB, lhs, where});
        }
        for (double M : davies_M) {
          Vec phi = (-M * psi.values).array().exp().matrix();
          Vec phi2 = phi.cwiseProduct(phi);
          double lhs = std::abs(d.sym(f2.cwiseProduct(phi2), one)) + std::abs(d.skew(f, f.cwiseProduct(phi2)));
          double z = f2.cwiseProduct(phi2).dot(mu);
          json w2 = where;
          w2["M"] = M;
          r3.push_back({se * M * weighted_energy(form, phi2, f, f), C1 / Pr * M * z, C1 * M * z, lhs, w2});
        }
      }
    }
  }
  std::vector<CertReport> out;
  out.push_back(solve_bundle("skew-assumption-1", {"C11", "C2", "C3"}, r1, family.id));
  out.push_back(solve_bundle("skew-assumption-2", {"C11", "C4", "C5"}, r2, family.id));
  out.push_back(solve_bundle("skew-assumption-davies", {"C11", "C6", "C7"}, r3, family.id));
  return out;
}

}  // namespace hklab
