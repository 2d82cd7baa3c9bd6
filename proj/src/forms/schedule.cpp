#include <algorithm>
#include <cmath>

#include "hklab/schedule.hpp"

namespace hklab {

Mat skew_operator(const ReferenceForm& form, const Vec& h) {
  require(h.size() == static_cast<Eigen::Index>(form.size()), "graph mismatch: profile has wrong length");
  const auto n = static_cast<Eigen::Index>(form.size());
  Mat D = Mat::Zero(n, n);
  for (const auto& e : form.graph().edges()) {
    auto a = static_cast<Eigen::Index>(e.a), b = static_cast<Eigen::Index>(e.b);
    double c = 0.5 * e.conductance * (h[a] - h[b]);
    D(a, a) += c;
    D(a, b) -= c;
    D(b, b) -= c;
    D(b, a) += c;
  }
  return D;
}

FormSchedule::FormSchedule(FormPtr ref, std::vector<SkewWindow> windows, std::string id)
    : ref_(std::move(ref)), windows_(std::move(windows)), id_(std::move(id)) {
  require(ref_ != nullptr, "schedule needs a reference form");
  require(!windows_.empty(), "schedule needs at least one window");
  for (std::size_t i = 0; i < windows_.size(); ++i) {
    require(windows_[i].begin < windows_[i].end, "schedule window must have begin < end");
    if (i) require(windows_[i].begin == windows_[i - 1].end, "schedule windows must be contiguous");
    Mat B = ref_->dense_energy();
    if (windows_[i].h) {
      Mat D = skew_operator(*ref_, *windows_[i].h);
      B += D - D.transpose();
    }
    B_.push_back(std::move(B));
  }
}

bool FormSchedule::contains(double t) const { return t >= span_begin() && t <= span_end(); }

std::size_t FormSchedule::window_index(double t) const {
  if (!contains(t)) throw Error("time " + std::to_string(t) + " outside the schedule span");
  for (std::size_t i = 0; i < windows_.size(); ++i)
    if (t < windows_[i].end) return i;
  return windows_.size() - 1;
}

std::vector<double> FormSchedule::breakpoints(double s, double t) const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < windows_.size(); ++i) {
    double b = windows_[i].end;
    if (b > s && b < t) out.push_back(b);
  }
  return out;
}

bool FormSchedule::symmetric() const {
  for (const auto& w : windows_)
    if (w.h && w.h->cwiseAbs().maxCoeff() > 0) return false;
  return true;
}

double FormSchedule::evaluate(double t, const Vec& f, const Vec& g) const {
  const Mat& B = form_matrix_at(t);
  require(f.size() == B.rows() && g.size() == B.rows(), "dimension mismatch");
  return g.dot(B * f);
}

FormSchedule FormSchedule::adjoint(double s, double t) const {
  std::vector<SkewWindow> w;
  for (auto it = windows_.rbegin(); it != windows_.rend(); ++it) {
    SkewWindow x;
    x.begin = std::isfinite(it->end) ? s + t - it->end : -INFINITY;
    x.end = std::isfinite(it->begin) ? s + t - it->begin : INFINITY;
    if (it->h) x.h = -*it->h;
    w.push_back(std::move(x));
  }
  return FormSchedule(ref_, std::move(w), id_ + "^adjoint");
}

FormSchedule reference_schedule(FormPtr ref) { return FormSchedule(std::move(ref), {SkewWindow{}}, "reference"); }

FormSchedule build_nonsymmetric(FormPtr ref, const HarmonicProfile& profile, double lambda) {
  require(profile.h.size() == static_cast<Eigen::Index>(ref->size()), "graph mismatch: profile from another graph");
  SkewWindow w;
  w.h = lambda * profile.h;
  return FormSchedule(std::move(ref), {w}, "skew(lambda=" + std::to_string(lambda) + ")");
}

FormSchedule build_time_dependent(FormPtr ref, const std::vector<ProfileWindow>& windows) {
  std::vector<SkewWindow> w;
  for (const auto& pw : windows) {
    require(pw.profile.h.size() == static_cast<Eigen::Index>(ref->size()), "graph mismatch: profile from another graph");
    w.push_back({pw.begin, pw.end, pw.lambda * pw.profile.h});
  }
  return FormSchedule(std::move(ref), std::move(w), "windows(" + std::to_string(w.size()) + ")");
}

double Decomposition::es(const Vec& f, const Vec& g) const { return sym(f, g) - sym_boundary(f, g); }

double Decomposition::sym_boundary(const Vec& f, const Vec& g) const {
  return sym(f.cwiseProduct(g), Vec::Ones(f.size()));
}

double Decomposition::l(const Vec& f, const Vec& g) const {
  Vec fg = f.cwiseProduct(g), one = Vec::Ones(f.size());
  return 0.25 * (full(fg, one) - full(one, fg) + full(f, g) - full(g, f));
}

double Decomposition::r(const Vec& f, const Vec& g) const {
  Vec fg = f.cwiseProduct(g), one = Vec::Ones(f.size());
  return 0.25 * (full(one, fg) - full(fg, one) + full(f, g) - full(g, f));
}

Vec Decomposition::l_density(const Vec& f) const {
  Vec one = Vec::Ones(f.size());
  Vec drift = B_.transpose() * one - B_ * one;
  return 0.25 * (f.cwiseProduct(drift) + (B_ - B_.transpose()) * f);
}

Decomposition decompose(const FormSchedule& schedule, double t) { return Decomposition(schedule.form_matrix_at(t)); }

namespace {
json time_json(double t) {
  if (std::isfinite(t)) return t;
  return t > 0 ? "inf" : "-inf";
}
double time_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  return j.get<std::string>() == "inf" ? INFINITY : -INFINITY;
}
}  // namespace

json schedule_to_json(const FormSchedule& s) {
  json j;
  j["id"] = s.id();
  json ws = json::array();
  for (const auto& w : s.windows()) {
    json x{{"begin", time_json(w.begin)}, {"end", time_json(w.end)}};
    if (w.h) x["h"] = vec_to_json(*w.h);
    ws.push_back(x);
  }
  j["windows"] = ws;
  return j;
}

FormSchedule schedule_from_json(FormPtr ref, const json& j) {
  std::vector<SkewWindow> ws;
  for (const auto& x : j.at("windows")) {
    SkewWindow w;
    w.begin = time_from(x.at("begin"));
    w.end = time_from(x.at("end"));
    if (x.contains("h")) w.h = vec_from_json(x["h"]);
    ws.push_back(w);
  }
  return FormSchedule(std::move(ref), std::move(ws), j.value("id", std::string("schedule")));
}

}  // namespace hklab
