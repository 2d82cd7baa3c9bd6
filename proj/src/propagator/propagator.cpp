#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "hklab/propagator.hpp"

namespace hklab {

SolverConfig SolverConfig::parse(const std::string& text) {
  SolverConfig c;
  std::string head = text, rest;
  if (auto p = text.find(':'); p != std::string::npos) {
    head = text.substr(0, p);
    rest = text.substr(p + 1);
  }
  if (head == "be" || head == "backward_euler" || head == "backward-euler") {
    c.scheme = Scheme::backward_euler;
  } else if (head == "theta") {
    c.scheme = Scheme::theta;
    c.theta = 0.5;
  } else if (head == "exact") {
    c.scheme = Scheme::exact;
  } else {
    throw Error("unknown scheme '" + head + "'");
  }
  std::stringstream ss(rest);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    std::string key = eq == std::string::npos ? "theta" : item.substr(0, eq);
    std::string val = eq == std::string::npos ? item : item.substr(eq + 1);
    double v = std::stod(val);
    if (key == "theta") c.theta = v;
    else if (key == "dt") c.dt = v;
    else if (key == "steps") c.dt = 1.0 / v;
    else throw Error("unknown solver key '" + key + "'");
  }
  if (c.scheme == Scheme::theta && !(c.theta >= 0.5 && c.theta <= 1.0)) throw Error("theta must lie in [1/2, 1]");
  if (!(c.dt > 0)) throw Error("dt must be positive");
  return c;
}

std::string SolverConfig::describe() const {
  std::ostringstream os;
  switch (scheme) {
    case Scheme::backward_euler: os << "backward_euler"; break;
    case Scheme::theta: os << "theta(" << theta << ")"; break;
    case Scheme::exact: os << "exact"; break;
  }
  os << ",dt=" << dt;
  return os.str();
}

json SolverConfig::to_json() const {
  return {{"scheme", scheme == Scheme::exact ? "exact" : (scheme == Scheme::theta ? "theta" : "backward_euler")},
          {"theta", effective_theta()},
          {"dt", dt},
          {"anchor", anchor}};
}

Propagator::Propagator(const FormSchedule& schedule, SolverConfig cfg, std::optional<VertexSet> domain)
    : schedule_(schedule), cfg_(cfg), domain_(std::move(domain)) {
  const auto& g = schedule_.reference().graph();
  if (domain_) {
    if (domain_->empty()) throw Error("dirichlet domain has empty interior");
    active_ = *domain_;
    std::sort(active_.begin(), active_.end());
    active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
    require(active_.back() < g.size(), "dirichlet domain vertex out of range");
    domain_ = active_;
  } else {
    for (std::size_t i = 0; i < g.size(); ++i) active_.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(active_.size());
  mu_.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) mu_[i] = g.measure()[static_cast<Eigen::Index>(active_[static_cast<std::size_t>(i)])];
  for (std::size_t w = 0; w < schedule_.window_count(); ++w) {
    const Mat& B = schedule_.form_matrix(w);
    Mat Bl(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        Bl(i, j) = B(static_cast<Eigen::Index>(active_[static_cast<std::size_t>(i)]),
                     static_cast<Eigen::Index>(active_[static_cast<std::size_t>(j)]));
    B_.push_back(std::move(Bl));
  }
}

std::vector<double> Propagator::grid(double s, double t) const {
  require(s <= t, "propagator needs s <= t");
  std::vector<double> out{s};
  if (t == s) return out;
  const double snap = 1e-9 * cfg_.dt;
  std::vector<double> fixed = schedule_.breakpoints(s, t);
  fixed.push_back(s);
  fixed.push_back(t);
  auto near_fixed = [&](double p) {
    for (double f : fixed)
      if (std::abs(p - f) <= snap) return true;
    return false;
  };
  std::vector<double> pts = schedule_.breakpoints(s, t);
  double k0 = std::ceil((s - cfg_.anchor) / cfg_.dt);
  for (double k = k0;; k += 1) {
    double p = cfg_.anchor + k * cfg_.dt;
    if (p >= t) break;
    if (p > s && !near_fixed(p)) pts.push_back(p);
  }
  std::sort(pts.begin(), pts.end());
  for (double p : pts)
    if (p > s + snap && p < t - snap) out.push_back(p);
  out.push_back(t);
  return out;
}

const Propagator::Step& Propagator::step(std::size_t window, double h) const {
  const long long key = std::llround(h / (cfg_.dt * 1e-9));
  auto it = cache_.find({window, key});
  if (it != cache_.end()) return it->second;
  const Mat& B = B_[window];
  const auto n = B.rows();
  Step st;
  if (cfg_.scheme == Scheme::exact) {
    bool sym = (B - B.transpose()).cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, B.cwiseAbs().maxCoeff());
    if (sym) {
      auto sp = spectral_.find(window);
      if (sp == spectral_.end()) {
        Vec is = mu_.cwiseSqrt().cwiseInverse();
        Eigen::SelfAdjointEigenSolver<Mat> es(is.asDiagonal() * B * is.asDiagonal());
        sp = spectral_.emplace(window, std::make_pair(Vec(es.eigenvalues()), Mat(es.eigenvectors()))).first;
      }
      const Vec& lam = sp->second.first;
      const Mat& V = sp->second.second;
      Vec e = (-h * lam).array().exp().matrix();
      Mat core = V * e.asDiagonal() * V.transpose();
      st.S = mu_.cwiseSqrt().cwiseInverse().asDiagonal() * core * mu_.cwiseSqrt().asDiagonal();
    } else {
      Mat A = -h * (mu_.cwiseInverse().asDiagonal() * B);
      st.S = A.exp();
    }
    st.m_matrix = false;
  } else {
    const double th = cfg_.effective_theta();
    Mat A = Mat(mu_.asDiagonal()) + th * h * B;
    Mat C = Mat(mu_.asDiagonal()) - (1 - th) * h * B;
    Eigen::PartialPivLU<Mat> lu(A);
    if (lu.rcond() < cfg_.rcond_min)
      throw Error("step matrix nearly singular (rcond " + std::to_string(lu.rcond()) + "); step too large");
    st.S = lu.solve(C);
    bool mm = C.minCoeff() >= 0;
    for (Eigen::Index i = 0; i < n && mm; ++i) {
      double off = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        if (A(i, j) > 0) mm = false;
        off += std::abs(A(i, j));
      }
      if (!(A(i, i) > off)) mm = false;
    }
    st.m_matrix = mm;
  }
  return cache_.emplace(std::make_pair(window, key), std::move(st)).first->second;
}

namespace {
Mat embed_square(const Mat& local, const VertexSet& active, std::size_t n) {
  Mat out = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < active.size(); ++i)
    for (std::size_t j = 0; j < active.size(); ++j)
      out(static_cast<Eigen::Index>(active[i]), static_cast<Eigen::Index>(active[j])) =
          local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}
}  // namespace

Mat Propagator::transition(double s, double t) const {
  auto pts = grid(s, t);
  if (cfg_.scheme == Scheme::exact && pts.size() > 2) {
    // the exact flow needs no sub-steps inside a window
    std::vector<double> merged{s};
    for (double b : schedule_.breakpoints(s, t))
      if (b > merged.back() && b < t) merged.push_back(b);
    merged.push_back(t);
    pts = std::move(merged);
  }
  const auto m = static_cast<Eigen::Index>(active_.size());
  Mat T = Mat::Identity(m, m);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double a = pts[k], b = pts[k + 1];
    T = step(schedule_.window_index(0.5 * (a + b)), b - a).S * T;
  }
  return embed_square(T, active_, schedule_.reference().size());
}

bool Propagator::m_matrix(double s, double t) const {
  auto pts = grid(s, t);
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    double a = pts[k], b = pts[k + 1];
    if (!step(schedule_.window_index(0.5 * (a + b)), b - a).m_matrix) return false;
  }
  return true;
}

Trajectory Propagator::solve(const Vec& f, double s, double T) const {
  require(s < T, "solve_ivp needs s < T");
  const auto n = static_cast<Eigen::Index>(schedule_.reference().size());
  if (f.size() != n) throw Error("dimension mismatch: initial datum has wrong length");
  Trajectory tr;
  tr.schedule_id = schedule_.id();
  tr.initial = f;
  tr.times = grid(s, T);
  Vec u(static_cast<Eigen::Index>(active_.size()));
  for (std::size_t i = 0; i < active_.size(); ++i) u[static_cast<Eigen::Index>(i)] = f[static_cast<Eigen::Index>(active_[i])];
  auto lift = [&](const Vec& loc) {
    Vec out = Vec::Zero(n);
    for (std::size_t i = 0; i < active_.size(); ++i) out[static_cast<Eigen::Index>(active_[i])] = loc[static_cast<Eigen::Index>(i)];
    return out;
  };
  tr.snapshots.push_back(domain_ ? lift(u) : f);
  for (std::size_t k = 0; k + 1 < tr.times.size(); ++k) {
    double a = tr.times[k], b = tr.times[k + 1];
    u = step(schedule_.window_index(0.5 * (a + b)), b - a).S * u;
    tr.snapshots.push_back(lift(u));
  }
  return tr;
}

KernelMatrix Propagator::kernel(double s, double t) const {
  KernelMatrix k;
  k.s = s;
  k.t = t;
  k.domain = domain_;
  k.grid = grid(s, t);
  k.schedule_id = schedule_.id();
  k.scheme = cfg_.describe();
  const Vec& mu = schedule_.reference().graph().measure();
  k.p = transition(s, t) * mu.cwiseInverse().asDiagonal();
  return k;
}

Trajectory solve_ivp(const FormSchedule& schedule, const Vec& f, double s, double T, const SolverConfig& cfg) {
  return Propagator(schedule, cfg).solve(f, s, T);
}

Mat transition(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg) {
  return Propagator(schedule, cfg).transition(s, t);
}

KernelMatrix kernel(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg,
                    std::optional<VertexSet> domain) {
  return Propagator(schedule, cfg, std::move(domain)).kernel(s, t);
}

KernelMatrix adjoint_kernel(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg,
                            std::optional<VertexSet> domain) {
  SolverConfig c = cfg;
  c.anchor = s + t - cfg.anchor;
  // mirrored grid: k dt + anchor maps to s + t - anchor - k dt
  c.anchor = std::fmod(c.anchor, cfg.dt);
  auto k = Propagator(schedule.adjoint(s, t), c, std::move(domain)).kernel(s, t);
  return k;
}

double l2_norm(const Mat& T, const Vec& mu) {
  Mat A = mu.cwiseSqrt().asDiagonal() * T * mu.cwiseSqrt().cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Mat> svd(A);
  return svd.singularValues()(0);
}

CertReport contraction_check(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg, double alpha,
                             double c) {
  CertReport rep;
  rep.inequality = "alpha-contraction";
  rep.family = "operator";
  rep.provenance = "singular value of M^{1/2} T M^{-1/2}";
  const Vec& mu = schedule.reference().graph().measure();
  double norm = l2_norm(transition(schedule, s, t, cfg), mu);
  double bound = std::exp((alpha - c) * (t - s));
  rep.constant = norm;
  rep.values["norm"] = norm;
  rep.values["bound"] = bound;
  rep.values["alpha"] = alpha;
  rep.values["c"] = c;
  rep.status = norm <= bound * (1 + 1e-9) ? Status::pass : Status::fail;
  return rep;
}

}  // namespace hklab
