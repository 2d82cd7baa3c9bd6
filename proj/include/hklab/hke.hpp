#pragma once

#include "hklab/propagator.hpp"
#include "hklab/scaling.hpp"

namespace hklab {

enum class RateVariant { phi, phi_beta };

// Phi(R,t) = sup_r {R/r - t/Psi(r)}, Phi_beta2(R,t) = sup_r {R/r - t R^b2 / (r^b2 Psi(R))}
struct RateFunction {
  ScalingFunction Psi = ScalingFunction::power(2.0);
  RateVariant variant = RateVariant::phi;
  bool force_search = false;  // skip the closed form for power Psi

  bool closed_form() const { return Psi.is_power() && !force_search; }
};

double rate(const RateFunction& rf, double R, double t);
// smallest u with rate(R, u) <= target (0 when target <= 0)
double rate_inverse_time(const RateFunction& rf, double R, double target);

struct DaviesSpec {
  double alpha_minus_c = 0.0;
  double horizon = 0;  // largest t - s; 0 means 4 Psi(d)
  std::optional<Vec> f1, f2;
};

// smallest C' with <T f1, f2> <= |f1||f2| exp(-Phi_b2(d, C'(t-s)) + (alpha - c)(t - s)) on every grid time
CertReport davies_gaffney_check(const FormSchedule& schedule, VertexId x, VertexId y, double s,
                                const SolverConfig& cfg, const ScalingFunction& Psi, const DaviesSpec& spec = {});

struct UpperFitSpec {
  double alpha_minus_c = 0.0;
  std::optional<double> clip_radius;  // default: graph radius, or distance to the complement of the domain
  double slope_lo = 0.25, slope_hi = 4.0;  // window of Phi values used by the decay regression
};

// (C, C'): C' is the smallest value with C(C') <= 2 C(infinity); the on-diagonal constant is reported as C_diag.
CertReport upper_hke_fit(const MetricMeasureGraph& g, const std::vector<KernelMatrix>& kernels,
                         const ScalingFunction& Psi, const UpperFitSpec& spec = {});

struct LowerFitSpec {
  VertexId center = 0;
  double radius = 0;
  double eps = 0.25;
};

struct LowerFit {
  CertReport near;
  CertReport off;  // not_applicable unless the metric is geodesic
};

LowerFit lower_hke_fit(const MetricMeasureGraph& g, const std::vector<KernelMatrix>& kernels,
                       const ScalingFunction& Psi, const LowerFitSpec& spec);

}  // namespace hklab
