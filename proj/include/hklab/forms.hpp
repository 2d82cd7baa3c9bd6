#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>

#include "hklab/graph.hpp"

namespace hklab {

using SpMat = Eigen::SparseMatrix<double>;

// E*(f,g) = sum over edges of w (f(x)-f(y)) (g(x)-g(y)).
class ReferenceForm {
 public:
  explicit ReferenceForm(GraphPtr g);

  const MetricMeasureGraph& graph() const { return *g_; }
  GraphPtr graph_ptr() const { return g_; }
  const SpMat& energy_operator() const { return K_; }
  const Mat& dense_energy() const { return Kd_; }
  SpMat generator() const;  // -M^{-1} K
  // Neumann energy on s: only edges with both endpoints in s (indexed by position in s).
  Mat restricted_energy(const VertexSet& s) const;
  std::size_t size() const { return g_->size(); }

 private:
  GraphPtr g_;
  SpMat K_;
  Mat Kd_;
};

using FormPtr = std::shared_ptr<const ReferenceForm>;

double energy(const ReferenceForm& form, const Vec& f, const Vec& g);
// Per-vertex density Gamma(f,g)(x) = (1/(2 mu(x))) sum_y w(x,y) (f(x)-f(y)) (g(x)-g(y)).
Vec energy_measure(const ReferenceForm& form, const Vec& f, const Vec& g);
// sum over x of weight(x) Gamma(f,g)(x) mu(x)
double weighted_energy(const ReferenceForm& form, const Vec& weight, const Vec& f, const Vec& g);

struct ScalarMap {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::string name;

  static ScalarMap affine(double a);
  static ScalarMap square();
  static ScalarMap smooth_default();  // sin(s) + s^3/3
  Vec apply(const Vec& u) const;
  Vec apply_derivative(const Vec& u) const;
};

// mu-weighted L1 norm of Gamma(Phi(u),v) - Phi'(u) Gamma(u,v).
double chain_rule_defect(const ReferenceForm& form, const ScalarMap& phi, const Vec& u, const Vec& v);

struct HarmonicProfile {
  Vec h;
  VertexSet boundary;
  Vec boundary_values;
  double c_h_prime = 0.0;  // |int dGamma(f,h)| <= C'_h int f dmu over f >= 0
  double c_h = 0.0;        // int f^2 dGamma(h,h) <= C_h ||f||_F^2
  json witnesses = json::object();
};

HarmonicProfile harmonic_profile(const ReferenceForm& form, const VertexSet& boundary, const Vec& values);
HarmonicProfile profile_from_values(const ReferenceForm& form, const Vec& h);
// gasket: corners (0,0,1); path: endpoints (0,1); grid: left column 0, right column 1.
std::pair<VertexSet, Vec> default_boundary(const MetricMeasureGraph& g);

json profile_to_json(const HarmonicProfile& p);
HarmonicProfile profile_from_json(const ReferenceForm& form, const json& j);

}  // namespace hklab
