#include <algorithm>
#include <array>
#include <cmath>

#include "hklab/cutoff.hpp"
#include "hklab/util.hpp"

namespace hklab {

VertexSet CutoffFunction::annulus(const MetricMeasureGraph& g) const {
  VertexSet out;
  for (std::size_t y = 0; y < g.size(); ++y) {
    double d = g.distance(center, y);
    if (d >= R && d < R + r) out.push_back(y);
  }
  return out;
}

double CutoffFunction::c0_eps(const ScalingFunction& psi) const {
  require(epsilon && c0, "cutoff carries no certified (eps, C0)");
  return *c0 * std::pow(*epsilon, 1.0 - psi.beta2() / 2.0);
}

namespace {
Vec plateau_values(const MetricMeasureGraph& g, VertexId x, double R, double r) {
  Vec v(static_cast<Eigen::Index>(g.size()));
  for (std::size_t y = 0; y < g.size(); ++y)
    v[static_cast<Eigen::Index>(y)] = std::clamp((R + r - g.distance(x, y)) / r, 0.0, 1.0);
  return v;
}

struct AnnulusIntegrals {
  double lhs = 0;     // int_A f^2 dGamma(psi,psi)
  double energy = 0;  // int_A psi^2 dGamma(f,f)
  double zero = 0;    // int_A psi f^2 dmu
};

AnnulusIntegrals annulus_integrals(const ReferenceForm& form, const Vec& psi, const VertexSet& A, const Vec& f) {
  const Vec& mu = form.graph().measure();
  Vec gpp = energy_measure(form, psi, psi);
  Vec gff = energy_measure(form, f, f);
  AnnulusIntegrals I;
  for (auto y : A) {
    auto i = static_cast<Eigen::Index>(y);
    I.lhs += f[i] * f[i] * gpp[i] * mu[i];
    I.energy += psi[i] * psi[i] * gff[i] * mu[i];
    I.zero += psi[i] * f[i] * f[i] * mu[i];
  }
  return I;
}
}  // namespace

CutoffFunction plateau_cutoff(const MetricMeasureGraph& g, VertexId x, double R, double r, bool allow_empty) {
  require(r > 0 && R >= 0, "plateau cutoff needs r > 0 and R >= 0");
  require(x < g.size(), "plateau cutoff: center out of range");
  CutoffFunction c;
  c.center = x;
  c.R = R;
  c.r = r;
  c.kind = CutoffKind::plateau;
  c.values = plateau_values(g, x, R, r);
  c.r_prime = r;
  if (!allow_empty && c.annulus(g).empty())
    throw Error("plateau cutoff: empty annulus (width below the mesh, no vertex separates the balls)");
  return c;
}

CutoffFunction layered_cutoff(const MetricMeasureGraph& g, VertexId x, double R, double r, double eps, double c1,
                              double c2, const ScalingFunction& psi, double r_ratio) {
  if (!(eps > 0 && eps < 1)) throw Error("layered cutoff: eps outside (0,1)");
  require(c1 >= 0 && c2 >= 0, "layered cutoff: layer constants must be nonnegative");
  require(r_ratio > 0 && r_ratio < 1, "layered cutoff: r'/r must lie in (0,1)");
  if (!(r > g.mesh())) throw Error("layered cutoff: degenerate annulus (r not above the mesh width)");
  const double beta2 = psi.beta2();
  const double lambda = c1 > 0 ? std::log(1 + std::sqrt(eps / c1)) : INFINITY;
  const double q = std::exp(-lambda / beta2);
  const double rp = r_ratio * r;

  struct Layer {
    double inner, width, weight;
  };
  std::vector<Layer> layers;
  double b_prev = 1.0, acc = 0.0;
  for (int n = 1; n <= 100000; ++n) {
    double s = rp * (1 - q) * std::pow(q, n - 1);
    if (s < g.mesh()) break;
    double b = std::isfinite(lambda) ? std::exp(-n * lambda) : 0.0;
    layers.push_back({R + acc, s, b_prev - b});
    acc += s;
    b_prev = b;
    if (b < 1e-12) break;
  }
  double tail = rp - acc;
  if (b_prev > 0 && tail > 0) layers.push_back({R + acc, tail, b_prev});

  CutoffFunction c;
  c.center = x;
  c.R = R;
  c.r = r;
  c.epsilon = eps;
  c.kind = CutoffKind::layered;
  c.lambda = lambda;
  c.r_prime = rp;
  c.n_layers = static_cast<int>(layers.size());
  const auto n = static_cast<Eigen::Index>(g.size());
  // 1 - sum w_k (1 - psi_k) is exactly 1 wherever every layer is 1
  Vec deficit = Vec::Zero(n);
  for (const auto& L : layers) {
    Vec pk = plateau_values(g, x, L.inner, L.width);
    deficit += L.weight * (Vec::Ones(n) - pk);
  }
  c.values = (Vec::Ones(n) - deficit).cwiseMax(0.0).cwiseMin(1.0);
  for (Eigen::Index i = 0; i < n; ++i)
    if (g.distance(x, static_cast<VertexId>(i)) >= R + rp) c.values[i] = 0.0;
  (void)c2;
  return c;
}

double csa_zero_order(const ReferenceForm& form, const CutoffFunction& psi, const Vec& f, double w) {
  auto I = annulus_integrals(form, psi.values, psi.annulus(form.graph()), f);
  double excess = std::max(0.0, I.lhs - w * I.energy);
  if (excess == 0.0) return 0.0;
  return I.zero > 0 ? excess / I.zero : INFINITY;
}

CertReport certify_csa(const MetricMeasureGraph& g, const ReferenceForm& form, const CutoffFunction& psi,
                       const ScalingFunction& Psi, const FunctionFamily& family) {
  require(psi.epsilon.has_value(), "certify_csa: cutoff carries no epsilon");
  require(!family.empty(), "certify_csa: empty family");
  const double eps = *psi.epsilon;
  const double scale = Psi(psi.r) * std::pow(eps, Psi.beta2() / 2.0 - 1.0);
  const VertexSet A = psi.annulus(g);
  CertReport rep;
  rep.inequality = "CSA";
  rep.family = family.id;
  rep.provenance = "per-member rearrangement";
  double best = 0.0;
  long arg = -1;
  for (std::size_t k = 0; k < family.size(); ++k) {
    auto I = annulus_integrals(form, psi.values, A, family.members[k]);
    double excess = std::max(0.0, I.lhs - eps * I.energy);
    double c0 = excess == 0.0 ? 0.0 : (I.zero > 0 ? excess * scale / I.zero : INFINITY);
    if (c0 > best || arg < 0) {
      best = c0;
      arg = static_cast<long>(k);
    }
  }
  rep.constant = best;
  rep.values["epsilon"] = eps;
  rep.values["annulus_size"] = static_cast<double>(A.size());
  rep.values["c0_eps"] = best * std::pow(eps, 1.0 - Psi.beta2() / 2.0);
  rep.witness = {{"center", psi.center}, {"R", psi.R}, {"r", psi.r}, {"member", arg}};
  rep.witness_function = family.members[static_cast<std::size_t>(arg)];
  if (!std::isfinite(best)) {
    rep.status = Status::infeasible;
    rep.notes.push_back("member vanishes on the support of psi within A while the left side is positive");
  }
  return rep;
}

CertReport attach_csa(const ReferenceForm& form, CutoffFunction& psi, const ScalingFunction& Psi,
                      const FunctionFamily& family) {
  auto rep = certify_csa(form.graph(), form, psi, Psi, family);
  psi.c0 = rep.constant;
  psi.family_id = family.id;
  return rep;
}

LayerConstants measure_layer_constants(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                                       VertexId x, double R, const std::vector<double>& widths,
                                       const FunctionFamily& family) {
  require(!widths.empty() && !family.empty(), "layer constants need widths and a family");
  std::vector<std::array<double, 3>> rows;
  LayerConstants out;
  for (double s : widths) {
    if (s < g.mesh()) continue;
    auto psi = plateau_cutoff(g, x, R, s, true);
    const VertexSet A = psi.annulus(g);
    if (A.empty()) continue;
    out.widths.push_back(s);
    Vec ones = Vec::Ones(static_cast<Eigen::Index>(g.size()));
    for (const auto& f : family.members) {
      // unweighted energy and mass on A
      auto Iw = annulus_integrals(form, ones, A, f);
      auto Ip = annulus_integrals(form, psi.values, A, f);
      double mass = 0;
      for (auto y : A) mass += f[static_cast<Eigen::Index>(y)] * f[static_cast<Eigen::Index>(y)] * g.measure()[static_cast<Eigen::Index>(y)];
      rows.push_back({Iw.energy, mass / Psi(s), Ip.lhs});
    }
  }
  require(!rows.empty(), "layer constants: no resolvable layer width");
  Mat A(static_cast<Eigen::Index>(rows.size()), 2);
  Vec b(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    A(static_cast<Eigen::Index>(i), 0) = rows[i][0];
    A(static_cast<Eigen::Index>(i), 1) = rows[i][1];
    b[static_cast<Eigen::Index>(i)] = rows[i][2];
  }
  auto lp = solve_covering_lp(A, b, Vec::Ones(2));
  if (!lp.feasible) throw Error("layer constants: infeasible (a member has no energy or mass on a layer annulus)");
  out.c1 = lp.x[0];
  out.c2 = lp.x[1];
  return out;
}

CertReport exp_cutoff_check(const ReferenceForm& form, const CutoffFunction& psi, const ScalingFunction& Psi, double M,
                            const Vec& f) {
  require(psi.epsilon && psi.c0, "exp_cutoff_check: cutoff needs certified (eps, C0)");
  const double eps = *psi.epsilon;
  if (!(eps < 0.5)) throw Error("exp_cutoff_check: eps must be < 1/2");
  const auto& g = form.graph();
  const Vec& mu = g.measure();
  Vec phi = (M * psi.values).array().exp().matrix();
  Vec f2 = f.cwiseProduct(f);
  double lhs = f2.cwiseProduct(energy_measure(form, phi, phi)).dot(mu);
  double chain = M * M * f2.cwiseProduct(phi.cwiseProduct(phi)).cwiseProduct(energy_measure(form, psi.values, psi.values)).dot(mu);
  Vec gff = energy_measure(form, f, f);
  double eA = 0, zA = 0;
  for (auto y : psi.annulus(g)) {
    auto i = static_cast<Eigen::Index>(y);
    eA += phi[i] * phi[i] * gff[i] * mu[i];
    zA += phi[i] * phi[i] * f2[i] * mu[i];
  }
  double rhs = (2 * eps / (1 - 2 * eps)) * M * M * eA +
               (psi.c0_eps(Psi) / ((1 - 2 * eps) * Psi(psi.r))) * M * M * zA;
  double allowance = std::max(0.0, lhs - chain);
  CertReport rep;
  rep.inequality = "exp_cutoff";
  rep.family = "single";
  rep.provenance = "direct evaluation with chain-rule allowance";
  rep.values["lhs"] = lhs;
  rep.values["rhs"] = rhs;
  rep.values["chain_allowance"] = allowance;
  rep.values["margin"] = rhs + allowance - lhs;
  rep.values["M"] = M;
  rep.constant = (rhs + allowance) > 0 ? lhs / (rhs + allowance) : (lhs > 0 ? INFINITY : 0.0);
  rep.status = (lhs <= rhs + allowance) ? Status::pass : Status::fail;
  rep.budget = 1.0;
  return rep;
}

json cutoff_to_json(const CutoffFunction& c) {
  json j;
  j["values"] = vec_to_json(c.values);
  j["center"] = c.center;
  j["R"] = c.R;
  j["r"] = c.r;
  j["kind"] = c.kind == CutoffKind::plateau ? "plateau" : "layered";
  if (c.epsilon) j["epsilon"] = *c.epsilon;
  if (c.c0) j["c0"] = std::isfinite(*c.c0) ? json(*c.c0) : json("inf");
  j["family"] = c.family_id;
  if (c.kind == CutoffKind::layered) {
    j["lambda"] = std::isfinite(c.lambda) ? json(c.lambda) : json("inf");
    j["n_layers"] = c.n_layers;
    j["r_prime"] = c.r_prime;
  }
  return j;
}

}  // namespace hklab
