#include <Eigen/SparseCholesky>
#include <cmath>

#include "hklab/forms.hpp"

namespace hklab {

namespace {
// C'_h: the ratio |f^T K h| / f^T mu over f >= 0 is linear-fractional, so its
// max sits at an indicator. C_h: largest generalized eigenvalue of
// diag(Gamma(h,h) mu) against the F-norm matrix K + M.
void certify_profile(const ReferenceForm& form, HarmonicProfile& p) {
  const auto& mu = form.graph().measure();
  Vec flux = form.dense_energy() * p.h;
  Eigen::Index arg = 0;
  p.c_h_prime = flux.cwiseAbs().cwiseQuotient(mu).maxCoeff(&arg);
  p.witnesses["c_h_prime_vertex"] = arg;

  Vec gh = energy_measure(form, p.h, p.h).cwiseProduct(mu);
  Mat F = form.dense_energy();
  F.diagonal() += mu;
  Mat A = gh.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, F);
  require(es.info() == Eigen::Success, "harmonic profile: eigen-solve failed");
  const auto n = es.eigenvalues().size();
  p.c_h = std::max(0.0, es.eigenvalues()[n - 1]);
  p.witnesses["c_h_route"] = "generalized eigen-solve";
}
}  // namespace

HarmonicProfile harmonic_profile(const ReferenceForm& form, const VertexSet& boundary, const Vec& values) {
  const auto& g = form.graph();
  require(!boundary.empty(), "harmonic profile: boundary set is empty");
  require(values.size() == static_cast<Eigen::Index>(boundary.size()), "harmonic profile: one value per boundary vertex");
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] < 0) throw Error("harmonic profile: negative boundary data");
  const std::size_t n = g.size();
  std::vector<long> pos(n, -1);
  auto onb = indicator_mask(n, boundary);
  VertexSet interior;
  for (std::size_t v = 0; v < n; ++v)
    if (!onb[v]) {
      pos[v] = static_cast<long>(interior.size());
      interior.push_back(v);
    }
  HarmonicProfile p;
  p.boundary = boundary;
  p.boundary_values = values;
  p.h = Vec::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < boundary.size(); ++i)
    p.h[static_cast<Eigen::Index>(boundary[i])] = values[static_cast<Eigen::Index>(i)];
  if (!interior.empty()) {
    const auto m = static_cast<Eigen::Index>(interior.size());
    std::vector<Eigen::Triplet<double>> trip;
    Vec rhs = Vec::Zero(m);
    for (const auto& e : g.edges()) {
      for (int side = 0; side < 2; ++side) {
        VertexId x = side ? e.b : e.a, y = side ? e.a : e.b;
        if (pos[x] < 0) continue;
        trip.emplace_back(pos[x], pos[x], e.conductance);
        if (pos[y] >= 0) trip.emplace_back(pos[x], pos[y], -e.conductance);
        else rhs[pos[x]] += e.conductance * p.h[static_cast<Eigen::Index>(y)];
      }
    }
    SpMat A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<SpMat> solver(A);
    if (solver.info() != Eigen::Success) throw Error("harmonic profile: singular system (interior not connected to boundary)");
    Vec hi = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !hi.allFinite())
      throw Error("harmonic profile: singular system (interior not connected to boundary)");
    for (std::size_t i = 0; i < interior.size(); ++i) p.h[static_cast<Eigen::Index>(interior[i])] = hi[static_cast<Eigen::Index>(i)];
  }
  certify_profile(form, p);
  return p;
}

HarmonicProfile profile_from_values(const ReferenceForm& form, const Vec& h) {
  require(h.size() == static_cast<Eigen::Index>(form.size()), "profile: wrong length");
  HarmonicProfile p;
  p.h = h;
  certify_profile(form, p);
  return p;
}

std::pair<VertexSet, Vec> default_boundary(const MetricMeasureGraph& g) {
  const auto& fam = g.family();
  if (fam.name == "gasket") return {{0, 1, 2}, (Vec(3) << 0.0, 0.0, 1.0).finished()};
  if (fam.name == "path") return {{0, g.size() - 1}, (Vec(2) << 0.0, 1.0).finished()};
  if (fam.name == "grid") {
    const auto n = static_cast<std::size_t>(fam.size);
    VertexSet b;
    std::vector<double> v;
    for (std::size_t j = 0; j <= n; ++j) {
      b.push_back(j * (n + 1));
      v.push_back(0.0);
      b.push_back(j * (n + 1) + n);
      v.push_back(1.0);
    }
    return {b, Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size()))};
  }
  throw Error("no default boundary for family '" + fam.name + "'");
}

json profile_to_json(const HarmonicProfile& p) {
  json j;
  j["h"] = vec_to_json(p.h);
  j["boundary"] = p.boundary;
  j["boundary_values"] = vec_to_json(p.boundary_values);
  j["c_h_prime"] = p.c_h_prime;
  j["c_h"] = p.c_h;
  j["witnesses"] = p.witnesses;
  return j;
}

HarmonicProfile profile_from_json(const ReferenceForm& form, const json& j) {
  if (j.contains("boundary") && !j["boundary"].empty())
    return harmonic_profile(form, j["boundary"].get<VertexSet>(), vec_from_json(j["boundary_values"]));
  return profile_from_values(form, vec_from_json(j.at("h")));
}

}  // namespace hklab
