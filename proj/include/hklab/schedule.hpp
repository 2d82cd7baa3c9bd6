#pragma once

#include <optional>

#include "hklab/forms.hpp"

namespace hklab {

struct SkewWindow {
  double begin = -INFINITY;
  double end = INFINITY;
  std::optional<Vec> h;  // already scaled by lambda; none means E_t = E*
};

// Piecewise-constant family E_t(f,g) = g^T B_t f with
// B = K + D_h - D_h^T and (D_h f)(x) mu(x) = mu(x) Gamma(f,h)(x).
class FormSchedule {
 public:
  FormSchedule(FormPtr ref, std::vector<SkewWindow> windows, std::string id);

  const ReferenceForm& reference() const { return *ref_; }
  FormPtr reference_ptr() const { return ref_; }
  const std::string& id() const { return id_; }
  const std::vector<SkewWindow>& windows() const { return windows_; }
  std::size_t window_count() const { return windows_.size(); }
  double span_begin() const { return windows_.front().begin; }
  double span_end() const { return windows_.back().end; }
  bool contains(double t) const;
  std::size_t window_index(double t) const;
  // window boundaries strictly inside (s, t)
  std::vector<double> breakpoints(double s, double t) const;
  bool symmetric() const;

  const Mat& form_matrix(std::size_t w) const { return B_[w]; }
  const Mat& form_matrix_at(double t) const { return B_[window_index(t)]; }
  double evaluate(double t, const Vec& f, const Vec& g) const;

  // E^(f,g) = E(g,f) run backwards on [s,t]; its kernels are transposes.
  FormSchedule adjoint(double s, double t) const;

 private:
  FormPtr ref_;
  std::vector<SkewWindow> windows_;
  std::vector<Mat> B_;
  std::string id_;
};

Mat skew_operator(const ReferenceForm& form, const Vec& h);  // D_h (not antisymmetrized)

FormSchedule reference_schedule(FormPtr ref);
FormSchedule build_nonsymmetric(FormPtr ref, const HarmonicProfile& profile, double lambda);
struct ProfileWindow {
  double begin, end;
  HarmonicProfile profile;
  double lambda;
};
FormSchedule build_time_dependent(FormPtr ref, const std::vector<ProfileWindow>& windows);

// Evaluators for E = E^s + E^sym(fg,1) + l + r at a fixed time.
class Decomposition {
 public:
  explicit Decomposition(const Mat& B) : B_(B) {}
  double full(const Vec& f, const Vec& g) const { return g.dot(B_ * f); }
  double sym(const Vec& f, const Vec& g) const { return 0.5 * (full(f, g) + full(g, f)); }
  double skew(const Vec& f, const Vec& g) const { return 0.5 * (full(f, g) - full(g, f)); }
  double es(const Vec& f, const Vec& g) const;
  double sym_boundary(const Vec& f, const Vec& g) const;
  double l(const Vec& f, const Vec& g) const;
  double r(const Vec& f, const Vec& g) const;
  // vector ell_f with l(f,g) = g . ell_f
  Vec l_density(const Vec& f) const;

 private:
  Mat B_;
};

Decomposition decompose(const FormSchedule& schedule, double t);

json schedule_to_json(const FormSchedule& s);
FormSchedule schedule_from_json(FormPtr ref, const json& j);

}  // namespace hklab
