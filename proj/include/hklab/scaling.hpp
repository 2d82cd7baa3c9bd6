#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hklab/report.hpp"

namespace hklab {

enum class PsiKind { power, piecewise_power, tabulated };

// Time-space scaling Psi. Non-power kinds are log-log piecewise linear.
class ScalingFunction {
 public:
  static ScalingFunction power(double beta, double a = 1.0);
  // a*r^{exponents[0]} below breaks[0]; exponent i+1 applies above breaks[i].
  static ScalingFunction piecewise_power(std::vector<double> breaks, std::vector<double> exponents,
                                         double a, double c_psi = 1.0);
  static ScalingFunction tabulated(std::vector<double> r, std::vector<double> psi, double beta1,
                                   double beta2, double c_psi = 1.0);
  // "power:beta=2,a=1", "gasket" (beta = log5/log2), "power:2".
  static ScalingFunction parse(const std::string& spec);

  double operator()(double r) const;
  double inverse(double v) const;

  PsiKind kind() const { return kind_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double c_psi() const { return c_psi_; }
  double coefficient() const { return a_; }
  bool is_power() const { return kind_ == PsiKind::power; }
  std::string describe() const;
  json to_json() const;

 private:
  PsiKind kind_ = PsiKind::power;
  double beta1_ = 2.0, beta2_ = 2.0, c_psi_ = 1.0, a_ = 1.0;
  // log-log nodes and segment slopes (slopes_[0] extrapolates left, back() right)
  std::vector<double> lr_, lp_, slopes_;
  std::vector<double> raw_r_, raw_psi_;
};

double gasket_walk_dimension();

std::vector<std::pair<double, double>> psi_samples(double lo, double hi, int n);

CertReport verify_psi(const ScalingFunction& psi, const std::vector<std::pair<double, double>>& samples);

}  // namespace hklab
