#include <cmath>

#include "hklab/forms.hpp"

namespace hklab {

ReferenceForm::ReferenceForm(GraphPtr g) : g_(std::move(g)) {
  require(g_ != nullptr, "reference form needs a graph");
  const auto n = static_cast<Eigen::Index>(g_->size());
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& e : g_->edges()) {
    auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    trip.emplace_back(a, a, e.conductance);
    trip.emplace_back(b, b, e.conductance);
    trip.emplace_back(a, b, -e.conductance);
    trip.emplace_back(b, a, -e.conductance);
  }
  K_.resize(n, n);
  K_.setFromTriplets(trip.begin(), trip.end());
  Kd_ = Mat(K_);
}

SpMat ReferenceForm::generator() const {
  Vec inv = g_->measure().cwiseInverse();
  SpMat L = -(inv.asDiagonal() * K_);
  return L;
}

Mat ReferenceForm::restricted_energy(const VertexSet& s) const {
  std::vector<long> pos(g_->size(), -1);
  for (std::size_t i = 0; i < s.size(); ++i) pos[s[i]] = static_cast<long>(i);
  const auto m = static_cast<Eigen::Index>(s.size());
  Mat K = Mat::Zero(m, m);
  for (const auto& e : g_->edges()) {
    long a = pos[e.a], b = pos[e.b];
    if (a < 0 || b < 0) continue;
    K(a, a) += e.conductance;
    K(b, b) += e.conductance;
    K(a, b) -= e.conductance;
    K(b, a) -= e.conductance;
  }
  return K;
}

namespace {
void check_dims(const ReferenceForm& form, const Vec& f, const Vec& g) {
  const auto n = static_cast<Eigen::Index>(form.size());
  if (f.size() != n || g.size() != n) throw Error("dimension mismatch: vertex function has wrong length");
}
}  // namespace

double energy(const ReferenceForm& form, const Vec& f, const Vec& g) {
  check_dims(form, f, g);
  double s = 0;
  for (const auto& e : form.graph().edges()) {
    auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    s += e.conductance * (f[a] - f[b]) * (g[a] - g[b]);
  }
  return s;
}

Vec energy_measure(const ReferenceForm& form, const Vec& f, const Vec& g) {
  check_dims(form, f, g);
  Vec out = Vec::Zero(f.size());
  for (const auto& e : form.graph().edges()) {
    auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    double c = 0.5 * e.conductance * (f[a] - f[b]) * (g[a] - g[b]);
    out[a] += c;
    out[b] += c;
  }
  return out.cwiseQuotient(form.graph().measure());
}

double weighted_energy(const ReferenceForm& form, const Vec& weight, const Vec& f, const Vec& g) {
  check_dims(form, f, g);
  double s = 0;
  for (const auto& e : form.graph().edges()) {
    auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    s += 0.5 * e.conductance * (f[a] - f[b]) * (g[a] - g[b]) * (weight[a] + weight[b]);
  }
  return s;
}

ScalarMap ScalarMap::affine(double a) {
  return {[a](double s) { return a * s; }, [a](double) { return a; }, "affine"};
}

ScalarMap ScalarMap::square() {
  return {[](double s) { return s * s; }, [](double s) { return 2 * s; }, "square"};
}

ScalarMap ScalarMap::smooth_default() {
  return {[](double s) { return std::sin(s) + s * s * s / 3; },
          [](double s) { return std::cos(s) + s * s; }, "sin+cube"};
}

Vec ScalarMap::apply(const Vec& u) const { return u.unaryExpr(value); }
Vec ScalarMap::apply_derivative(const Vec& u) const { return u.unaryExpr(derivative); }

double chain_rule_defect(const ReferenceForm& form, const ScalarMap& phi, const Vec& u, const Vec& v) {
  Vec lhs = energy_measure(form, phi.apply(u), v);
  Vec rhs = phi.apply_derivative(u).cwiseProduct(energy_measure(form, u, v));
  return (lhs - rhs).cwiseAbs().dot(form.graph().measure());
}

}  // namespace hklab
