#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "hklab/geometry.hpp"
#include "hklab/poincare.hpp"

namespace hklab {

namespace {
Vec lift(const MetricMeasureGraph& g, const VertexSet& s, const Vec& local) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < s.size(); ++i) out[static_cast<Eigen::Index>(s[i])] = local[static_cast<Eigen::Index>(i)];
  return out;
}

Vec local_measure(const MetricMeasureGraph& g, const VertexSet& s) {
  Vec m(static_cast<Eigen::Index>(s.size()));
  for (std::size_t i = 0; i < s.size(); ++i) m[static_cast<Eigen::Index>(i)] = g.measure()[static_cast<Eigen::Index>(s[i])];
  return m;
}

// Eigenpairs of K v = lambda diag(m) v, ascending.
Eigen::SelfAdjointEigenSolver<Mat> mass_eigen(const Mat& K, const Vec& m) {
  Vec s = m.cwiseSqrt().cwiseInverse();
  Mat S = s.asDiagonal() * K * s.asDiagonal();
  return Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (S + S.transpose()));
}

json ball_json(const BallTriple& b) { return {{"center", b.center}, {"R", b.R}, {"r", b.r}}; }

// variance of f over s (weights m) as a quadratic form: diag(m) - m m^T / sum m
Mat variance_form(const Vec& m) { return Mat(m.asDiagonal()) - m * m.transpose() / m.sum(); }

// Largest theta with f^T P f <= theta f^T K f, both vanishing on constants; K must be PD on 1^perp.
std::pair<double, Vec> max_ratio_off_constants(const Mat& P, const Mat& K, bool& degenerate) {
  const auto n = P.rows();
  degenerate = false;
  if (n < 2) return {0.0, Vec::Zero(n)};
  // orthonormal basis of the complement of constants
  Mat A = Mat::Identity(n, n);
  A.col(0) = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  Eigen::HouseholderQR<Mat> qr(A);
  Mat Q = Mat(qr.householderQ()).rightCols(n - 1);
  Mat Kr = Q.transpose() * K * Q, Pr = Q.transpose() * P * Q;
  Eigen::LLT<Mat> llt(0.5 * (Kr + Kr.transpose()));
  double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() < 1e-10 * std::sqrt(scale)) {
    degenerate = true;
    return {INFINITY, Vec::Zero(n)};
  }
  Mat L = llt.matrixL();
  Mat X = L.triangularView<Eigen::Lower>().solve(Pr);
  Mat S = L.triangularView<Eigen::Lower>().solve(X.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
  Vec y = es.eigenvectors().col(n - 2);
  Vec v = Q * L.transpose().triangularView<Eigen::Upper>().solve(y);
  return {es.eigenvalues()(n - 2), v};
}
}  // namespace

CertReport certify_pi(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                      const BallTriple& ball, PiMode mode) {
  const VertexSet B = hklab::ball(g, ball.center, ball.R + ball.r);
  require(!B.empty(), "certify_pi: empty ball");
  CertReport rep;
  rep.inequality = mode == PiMode::strong ? "PI" : "weak-PI";
  rep.family = "all functions";
  rep.witness = ball_json(ball);
  const Vec m = local_measure(g, B);
  if (mode == PiMode::strong) {
    rep.provenance = "exact generalized eigen-solve (Neumann energy on B)";
    if (B.size() == 1) {
      rep.constant = 0.0;
      rep.notes.push_back("single-vertex ball: variance vanishes");
      return rep;
    }
    Mat K = form.restricted_energy(B);
    auto es = mass_eigen(K, m);
    const Vec& ev = es.eigenvalues();
    double tol = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    int zeros = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev[i] <= tol) ++zeros;
    if (zeros > 1) {
      rep.status = Status::infeasible;
      rep.constant = INFINITY;
      rep.notes.push_back("ball is disconnected: " + std::to_string(zeros) + " zero modes");
      Vec v = m.cwiseSqrt().cwiseInverse().cwiseProduct(es.eigenvectors().col(1));
      rep.witness_function = lift(g, B, v);
      return rep;
    }
    double lambda1 = ev[1];
    rep.constant = 1.0 / (lambda1 * Psi(ball.R + ball.r));
    rep.values["lambda1"] = lambda1;
    rep.values["ratio"] = 1.0 / lambda1;
    rep.witness_function = lift(g, B, m.cwiseSqrt().cwiseInverse().cwiseProduct(es.eigenvectors().col(1)));
    return rep;
  }
  rep.provenance = "exact generalized eigen-solve (variance on B(x,R+r), Neumann energy on B(x,2R))";
  const VertexSet B2 = hklab::ball(g, ball.center, 2 * ball.R);
  if (B2.size() == g.size()) rep.notes.push_back("B(x,2R) is the whole graph");
  auto pos = indicator_mask(g.size(), B);
  Vec m2 = Vec::Zero(static_cast<Eigen::Index>(B2.size()));
  for (std::size_t i = 0; i < B2.size(); ++i)
    if (pos[B2[i]]) m2[static_cast<Eigen::Index>(i)] = g.measure()[static_cast<Eigen::Index>(B2[i])];
  Mat P = variance_form(m2);
  Mat K2 = form.restricted_energy(B2);
  bool degenerate = false;
  auto [theta, v] = max_ratio_off_constants(P, K2, degenerate);
  if (degenerate) {
    rep.status = Status::infeasible;
    rep.constant = INFINITY;
    rep.notes.push_back("B(x,2R) is disconnected");
    return rep;
  }
  rep.constant = theta / Psi(2 * ball.R);
  rep.values["ratio"] = theta;
  rep.witness_function = lift(g, B2, v);
  return rep;
}

CertReport pi_sweep(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                    const BallTriple& ball, const FunctionFamily& family) {
  require(!family.empty(), "pi_sweep: empty family");
  const VertexSet B = hklab::ball(g, ball.center, ball.R + ball.r);
  const Vec m = local_measure(g, B);
  const Mat K = form.restricted_energy(B);
  CertReport rep;
  rep.inequality = "PI";
  rep.family = family.id;
  rep.provenance = "Rayleigh quotient sweep";
  rep.witness = ball_json(ball);
  double best = 0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    Vec f(static_cast<Eigen::Index>(B.size()));
    for (std::size_t i = 0; i < B.size(); ++i) f[static_cast<Eigen::Index>(i)] = family.members[k][static_cast<Eigen::Index>(B[i])];
    double mean = f.dot(m) / m.sum();
    Vec c = f.array() - mean;
    double var = c.cwiseProduct(c).dot(m);
    double e = f.dot(K * f);
    if (var <= 1e-14 * std::max(1.0, f.squaredNorm() * m.maxCoeff())) continue;
    double ratio = e > 0 ? var / e : INFINITY;
    if (ratio > best) {
      best = ratio;
      rep.witness["member"] = k;
    }
  }
  rep.values["ratio"] = best;
  rep.constant = best / Psi(ball.R + ball.r);
  return rep;
}

CertReport certify_weighted_pi(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                               const CutoffFunction& psi, const std::optional<PiReference>& reference) {
  require(psi.values.size() == static_cast<Eigen::Index>(g.size()) && form.size() == g.size(),
          "weighted PI: cutoff or form from another graph");
  VertexSet S;
  // psi below 1e-12 is distance rounding at the rim, not support
  for (std::size_t y = 0; y < g.size(); ++y)
    if (psi.values[static_cast<Eigen::Index>(y)] > 1e-12) S.push_back(y);
  if (S.empty()) throw Error("weighted PI: psi vanishes identically");
  CertReport rep;
  rep.inequality = "weighted-PI";
  rep.family = "all functions";
  rep.provenance = "exact generalized eigen-solve on supp psi";
  rep.witness = {{"center", psi.center}, {"R", psi.R}, {"r", psi.r}};
  if (S.size() < g.size()) rep.notes.push_back("restricted to supp psi (" + std::to_string(S.size()) + " vertices)");
  std::vector<long> pos(g.size(), -1);
  for (std::size_t i = 0; i < S.size(); ++i) pos[S[i]] = static_cast<long>(i);
  const auto n = static_cast<Eigen::Index>(S.size());
  Vec m(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = psi.values[static_cast<Eigen::Index>(S[static_cast<std::size_t>(i)])];
    m[i] = p * p * g.measure()[static_cast<Eigen::Index>(S[static_cast<std::size_t>(i)])];
  }
  Mat K = Mat::Zero(n, n);
  for (const auto& e : g.edges()) {
    long a = pos[e.a], b = pos[e.b];
    if (a < 0 || b < 0) continue;
    double pa = psi.values[static_cast<Eigen::Index>(e.a)], pb = psi.values[static_cast<Eigen::Index>(e.b)];
    double w = e.conductance * 0.5 * (pa * pa + pb * pb);
    K(a, a) += w;
    K(b, b) += w;
    K(a, b) -= w;
    K(b, a) -= w;
  }
  const double Pr = Psi(psi.R + psi.r);
  if (n == 1) {
    rep.constant = 0.0;
    return rep;
  }
  // every edge inside S has positive weight, so the kernel is the constants iff S is connected
  if (!is_connected(g, S)) {
    rep.status = Status::infeasible;
    rep.constant = INFINITY;
    rep.notes.push_back("weighted energy degenerate beyond constants: supp psi is disconnected");
    return rep;
  }
  auto es = mass_eigen(K, m);
  const Vec& ev = es.eigenvalues();
  rep.values["ratio"] = 1.0 / ev[1];
  rep.constant = 1.0 / (ev[1] * Pr);
  rep.witness_function = lift(g, S, m.cwiseSqrt().cwiseInverse().cwiseProduct(es.eigenvectors().col(1)));
  if (reference) {
    rep.values["ref_C0"] = reference->c0;
    rep.values["ref_C_VD"] = reference->c_vd;
    rep.values["ref_C_PI"] = reference->c_pi;
    if (std::isfinite(reference->c_pi) && reference->c_pi > 0)
      rep.values["ratio_to_C_PI"] = rep.constant / reference->c_pi;
  }
  return rep;
}

FunctionFamily dirichlet_eigen_family(const ReferenceForm& form, VertexId x, double R, std::size_t count) {
  const auto& g = form.graph();
  const VertexSet B = hklab::ball(g, x, R);
  require(!B.empty(), "dirichlet eigen family: empty ball");
  require(B.size() < g.size(), "dirichlet eigen family: ball is the whole graph");
  std::vector<long> pos(g.size(), -1);
  for (std::size_t i = 0; i < B.size(); ++i) pos[B[i]] = static_cast<long>(i);
  const auto n = static_cast<Eigen::Index>(B.size());
  Mat K = Mat::Zero(n, n);
  for (const auto& e : g.edges()) {
    long a = pos[e.a], b = pos[e.b];
    if (a >= 0) K(a, a) += e.conductance;
    if (b >= 0) K(b, b) += e.conductance;
    if (a >= 0 && b >= 0) {
      K(a, b) -= e.conductance;
      K(b, a) -= e.conductance;
    }
  }
  const Vec m = local_measure(g, B);
  auto es = mass_eigen(K, m);
  FunctionFamily fam{"dirichlet-eigen" + std::to_string(count), {}};
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(n, static_cast<Eigen::Index>(count)); ++k) {
    Vec v = m.cwiseSqrt().cwiseInverse().cwiseProduct(es.eigenvectors().col(k));
    if (v.sum() < 0) v = -v;
    fam.members.push_back(lift(g, B, v));
  }
  return fam;
}

Vec ball_average(const MetricMeasureGraph& g, const Vec& f, double s) {
  Vec out(f.size());
  for (std::size_t y = 0; y < g.size(); ++y) {
    double num = 0, den = 0;
    for (auto z : hklab::ball(g, y, s)) {
      num += f[static_cast<Eigen::Index>(z)] * g.measure()[static_cast<Eigen::Index>(z)];
      den += g.measure()[static_cast<Eigen::Index>(z)];
    }
    out[static_cast<Eigen::Index>(y)] = num / den;
  }
  return out;
}

CertReport certify_pseudo_pi(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                             VertexId x, double R, const std::vector<double>& s_grid, const FunctionFamily& family) {
  if (s_grid.empty()) throw Error("certify_pseudo_pi: empty s-grid");
  require(!family.empty(), "certify_pseudo_pi: empty family");
  const VertexSet B = hklab::ball(g, x, R), Bq = hklab::ball(g, x, R / 4);
  auto inB = indicator_mask(g.size(), B), inBq = indicator_mask(g.size(), Bq);
  const Vec& mu = g.measure();
  CertReport rep;
  rep.inequality = "pseudo-PI";
  rep.family = family.id;
  rep.provenance = "direct evaluation over (f, s)";
  double best = 0, compact = 0;
  std::size_t used = 0, used_compact = 0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const Vec& f = family.members[k];
    bool inside = true, inside_q = true;
    for (std::size_t y = 0; y < g.size(); ++y) {
      if (f[static_cast<Eigen::Index>(y)] != 0.0) {
        if (!inB[y]) inside = false;
        if (!inBq[y]) inside_q = false;
      }
    }
    if (!inside) continue;
    double e = energy(form, f, f);
    if (!(e > 0)) continue;
    ++used;
    for (double s : s_grid) {
      require(s > 0, "certify_pseudo_pi: s must be positive");
      Vec d = f - ball_average(g, f, s);
      double ratio = d.cwiseProduct(d).dot(mu) / (Psi(s) * e);
      if (ratio > best) {
        best = ratio;
        rep.witness = {{"member", k}, {"s", s}, {"center", x}, {"R", R}};
      }
    }
    if (inside_q) {
      ++used_compact;
      compact = std::max(compact, f.cwiseProduct(f).dot(mu) / (Psi(R) * e));
    }
  }
  require(used > 0, "certify_pseudo_pi: no family member supported in B(x,R)");
  rep.constant = best;
  rep.values["members_used"] = static_cast<double>(used);
  rep.values["compact"] = compact;
  rep.values["compact_members"] = static_cast<double>(used_compact);
  if (hklab::ball(g, x, R).size() == g.size()) rep.notes.push_back("B(x,R) is the whole graph; compact variant not meaningful");
  return rep;
}

double sobolev_kappa(double c_vd, double beta1) {
  double nu = std::max(std::log2(c_vd), 2 * beta1);
  return 1.0 / (1.0 - beta1 / nu);
}

CertReport certify_sobolev(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                           VertexId x, double R, std::optional<double> kappa, const FunctionFamily& family,
                           std::optional<double> c_vd) {
  require(!family.empty(), "certify_sobolev: empty family");
  CertReport rep;
  rep.inequality = "SI";
  rep.family = family.id;
  rep.provenance = "family sweep";
  if (!kappa) {
    require(c_vd.has_value(), "certify_sobolev: need kappa or a measured C_VD");
    kappa = sobolev_kappa(*c_vd, Psi.beta1());
    rep.notes.push_back("kappa derived from 1 - 1/kappa = beta1/nu with nu = max(log2 C_VD, 2 beta1)");
    rep.values["C_VD"] = *c_vd;
  }
  const double k = *kappa;
  require(k > 1, "certify_sobolev: kappa must exceed 1");
  const VertexSet B = hklab::ball(g, x, R);
  if (B.size() == g.size()) rep.notes.push_back("B(x,R) is the whole graph: constants have zero energy");
  auto inB = indicator_mask(g.size(), B);
  const Vec& mu = g.measure();
  const double V = volume(g, x, R);
  double best = 0;
  std::size_t used = 0;
  for (std::size_t m = 0; m < family.size(); ++m) {
    const Vec& f = family.members[m];
    bool inside = true;
    for (std::size_t y = 0; y < g.size(); ++y)
      if (f[static_cast<Eigen::Index>(y)] != 0.0 && !inB[y]) inside = false;
    if (!inside) continue;
    double norm = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) norm += std::pow(std::abs(f[i]), 2 * k) * mu[i];
    if (norm == 0) continue;
    double e = energy(form, f, f);
    if (!(e > 0)) throw Error("certify_sobolev: member with zero energy and nonzero norm");
    ++used;
    double ratio = std::pow(norm, 1.0 / k) * std::pow(V, 1.0 - 1.0 / k) / (Psi(R) * e);
    if (ratio > best) {
      best = ratio;
      rep.witness = {{"member", m}, {"center", x}, {"R", R}};
      rep.witness_function = f;
    }
  }
  require(used > 0, "certify_sobolev: no family member supported in B(x,R)");
  rep.constant = best;
  rep.values["kappa"] = k;
  rep.values["members_used"] = static_cast<double>(used);
  return rep;
}

}  // namespace hklab
