#include "hklab/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hklab {

double gasket_walk_dimension() { return std::log(5.0) / std::log(2.0); }

ScalingFunction ScalingFunction::power(double beta, double a) {
  require(beta > 0 && a > 0, "power scaling needs beta > 0 and a > 0");
  ScalingFunction s;
  s.kind_ = PsiKind::power;
  s.beta1_ = s.beta2_ = beta;
  s.a_ = a;
  s.c_psi_ = 1.0;
  return s;
}

ScalingFunction ScalingFunction::piecewise_power(std::vector<double> breaks, std::vector<double> exponents,
                                                 double a, double c_psi) {
  require(exponents.size() == breaks.size() + 1, "piecewise power: need one more exponent than breaks");
  require(a > 0 && c_psi >= 1.0, "piecewise power: a > 0 and c_psi >= 1 required");
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    require(breaks[i] > 0, "piecewise power: breaks must be positive");
    if (i) require(breaks[i] > breaks[i - 1], "piecewise power: breaks must increase");
  }
  for (double b : exponents) require(b > 0, "piecewise power: exponents must be positive");
  ScalingFunction s;
  s.kind_ = PsiKind::piecewise_power;
  s.a_ = a;
  s.c_psi_ = c_psi;
  s.beta1_ = *std::min_element(exponents.begin(), exponents.end());
  s.beta2_ = *std::max_element(exponents.begin(), exponents.end());
  if (breaks.empty()) {
    // single segment: store one node at r = 1
    s.lr_ = {0.0};
    s.lp_ = {std::log(a)};
    s.slopes_ = {exponents[0], exponents[0]};
  } else {
    double lp = std::log(a) + exponents[0] * std::log(breaks[0]);
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      if (i) lp += exponents[i] * (std::log(breaks[i]) - std::log(breaks[i - 1]));
      s.lr_.push_back(std::log(breaks[i]));
      s.lp_.push_back(lp);
    }
    s.slopes_ = exponents;
  }
  s.raw_r_ = breaks;
  s.raw_psi_ = exponents;
  return s;
}

ScalingFunction ScalingFunction::tabulated(std::vector<double> r, std::vector<double> psi, double beta1,
                                           double beta2, double c_psi) {
  require(r.size() == psi.size() && r.size() >= 2, "tabulated scaling needs >= 2 matching nodes");
  require(beta1 > 0 && beta2 >= beta1 && c_psi >= 1.0, "tabulated scaling: need 0 < beta1 <= beta2, c_psi >= 1");
  ScalingFunction s;
  s.kind_ = PsiKind::tabulated;
  s.beta1_ = beta1;
  s.beta2_ = beta2;
  s.c_psi_ = c_psi;
  for (std::size_t i = 0; i < r.size(); ++i) {
    require(r[i] > 0 && psi[i] > 0, "tabulated scaling: nodes must be positive");
    if (i) {
      require(r[i] > r[i - 1], "tabulated scaling: radii must increase");
      if (!(psi[i] > psi[i - 1])) throw Error("nonmonotone tabulated Psi at node " + std::to_string(i));
    }
    s.lr_.push_back(std::log(r[i]));
    s.lp_.push_back(std::log(psi[i]));
  }
  for (std::size_t i = 0; i + 1 < r.size(); ++i)
    s.slopes_.push_back((s.lp_[i + 1] - s.lp_[i]) / (s.lr_[i + 1] - s.lr_[i]));
  s.slopes_.insert(s.slopes_.begin(), s.slopes_.front());
  s.slopes_.push_back(s.slopes_.back());
  s.raw_r_ = std::move(r);
  s.raw_psi_ = std::move(psi);
  return s;
}

double ScalingFunction::operator()(double r) const {
  if (r <= 0) return 0.0;
  if (kind_ == PsiKind::power) return a_ * std::pow(r, beta1_);
  double x = std::log(r);
  // segment k covers [lr_[k-1], lr_[k]); slopes_[k] applies there
  std::size_t k = static_cast<std::size_t>(std::upper_bound(lr_.begin(), lr_.end(), x) - lr_.begin());
  if (k == 0) return std::exp(lp_[0] + slopes_[0] * (x - lr_[0]));
  return std::exp(lp_[k - 1] + slopes_[k] * (x - lr_[k - 1]));
}

double ScalingFunction::inverse(double v) const {
  if (v <= 0) return 0.0;
  if (kind_ == PsiKind::power) return std::pow(v / a_, 1.0 / beta1_);
  double y = std::log(v);
  std::size_t k = static_cast<std::size_t>(std::upper_bound(lp_.begin(), lp_.end(), y) - lp_.begin());
  if (k == 0) return std::exp(lr_[0] + (y - lp_[0]) / slopes_[0]);
  return std::exp(lr_[k - 1] + (y - lp_[k - 1]) / slopes_[k]);
}

std::string ScalingFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case PsiKind::power: os << "power(a=" << a_ << ",beta=" << beta1_ << ")"; break;
    case PsiKind::piecewise_power: os << "piecewise_power(beta1=" << beta1_ << ",beta2=" << beta2_ << ")"; break;
    case PsiKind::tabulated: os << "tabulated(n=" << raw_r_.size() << ",beta1=" << beta1_ << ",beta2=" << beta2_ << ")"; break;
  }
  return os.str();
}

json ScalingFunction::to_json() const {
  json j;
  j["kind"] = kind_ == PsiKind::power ? "power" : (kind_ == PsiKind::tabulated ? "tabulated" : "piecewise_power");
  j["beta1"] = beta1_;
  j["beta2"] = beta2_;
  j["c_psi"] = c_psi_;
  if (kind_ != PsiKind::tabulated) j["a"] = a_;
  if (kind_ == PsiKind::tabulated) {
    j["r"] = raw_r_;
    j["psi"] = raw_psi_;
  }
  if (kind_ == PsiKind::piecewise_power) {
    j["breaks"] = raw_r_;
    j["exponents"] = raw_psi_;
  }
  return j;
}

namespace {
double parse_number(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
  if (s == "gasket" || s == "log5/log2") return gasket_walk_dimension();
  return std::stod(s);
}
}  // namespace

ScalingFunction ScalingFunction::parse(const std::string& spec) {
  std::string body = spec;
  std::string kind = spec;
  auto colon = spec.find(':');
  if (colon != std::string::npos) {
    kind = spec.substr(0, colon);
    body = spec.substr(colon + 1);
  } else {
    body.clear();
  }
  if (kind == "gasket") return power(gasket_walk_dimension());
  if (kind != "power") throw Error("unsupported Psi spec '" + spec + "'");
  double beta = 2.0, a = 1.0;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) {
      beta = parse_number(item);
      continue;
    }
    std::string k = item.substr(0, eq), v = item.substr(eq + 1);
    if (k == "beta") beta = parse_number(v);
    else if (k == "a") a = parse_number(v);
    else throw Error("unknown Psi key '" + k + "'");
  }
  return power(beta, a);
}

std::vector<std::pair<double, double>> psi_samples(double lo, double hi, int n) {
  require(lo > 0 && hi > lo && n >= 2, "psi_samples: need 0 < lo < hi, n >= 2");
  std::vector<double> r(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, double(i) / (n - 1));
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j) out.emplace_back(r[i], r[j]);
  return out;
}

CertReport verify_psi(const ScalingFunction& psi, const std::vector<std::pair<double, double>>& samples) {
  if (psi.beta1() < 2.0) throw Error("verify_psi: beta1 < 2 is outside the supported range [2, inf)");
  require(!samples.empty(), "verify_psi: empty sample set");
  CertReport rep;
  rep.inequality = "psi_scaling";
  rep.family = "samples:" + std::to_string(samples.size());
  rep.provenance = "exact ratio evaluation";
  double tight = 1.0;
  double ws = 0, wR = 0;
  std::string side = "none";
  for (auto [s, R] : samples) {
    require(s > 0 && R > s, "verify_psi: samples need 0 < s < R");
    double q = psi(R) / psi(s), x = R / s;
    double lower = std::pow(x, psi.beta1()) / q;  // C >= (R/s)^b1 / q
    double upper = q / std::pow(x, psi.beta2());  // C >= q / (R/s)^b2
    if (lower > tight) {
      tight = lower;
      ws = s, wR = R, side = "lower";
    }
    if (upper > tight) {
      tight = upper;
      ws = s, wR = R, side = "upper";
    }
  }
  rep.constant = tight;
  rep.values["beta1"] = psi.beta1();
  rep.values["beta2"] = psi.beta2();
  rep.witness = {{"s", ws}, {"R", wR}, {"side", side}};
  // one ulp-scale slack for pure powers evaluated through pow()
  if (tight <= psi.c_psi() * (1 + 1e-12)) {
    rep.with_budget(psi.c_psi() * (1 + 1e-12));
  } else {
    rep.budget = psi.c_psi();
    rep.status = Status::infeasible;
    rep.notes.push_back("declared c_psi violated at the witness pair");
  }
  return rep;
}

}  // namespace hklab
