#pragma once

#include <optional>

#include "hklab/cutoff.hpp"

namespace hklab {

enum class PiMode { strong, weak };

// Strong: 1/(lambda_1 Psi(R+r)) from the Neumann problem on B(x,R+r).
// Weak: variance over B(x,R+r) against the Neumann energy on B(x,2R), divided by Psi(2R).
CertReport certify_pi(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                      const BallTriple& ball, PiMode mode = PiMode::strong);

// max over the family of int_B |f - f_B|^2 / int_B dGamma(f,f), Neumann energy on B = B(x,R+r).
// Divided by Psi(R+r) like certify_pi.
CertReport pi_sweep(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                    const BallTriple& ball, const FunctionFamily& family);

struct PiReference {
  double c0 = NAN, c_vd = NAN, c_pi = NAN;
};

// Generalized eigenproblem on supp psi with mass psi^2 mu and edge weight w (psi_x^2 + psi_y^2)/2.
CertReport certify_weighted_pi(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                               const CutoffFunction& psi, const std::optional<PiReference>& reference = {});

// Lowest Dirichlet eigenfunctions on B(x,R) (zero outside), full energy.
FunctionFamily dirichlet_eigen_family(const ReferenceForm& form, VertexId x, double R, std::size_t count);

// f_s(y) = mean of f over B(y,s)
Vec ball_average(const MetricMeasureGraph& g, const Vec& f, double s);

// max over (f, s) of int |f - f_s|^2 / (Psi(s) E(f,f)) for f supported in B(x,R); the compact
// variant int f^2 / (Psi(R) E(f,f)) over members supported in B(x,R/4) is reported as "compact".
CertReport certify_pseudo_pi(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                             VertexId x, double R, const std::vector<double>& s_grid, const FunctionFamily& family);

// max over the family of (int |f|^{2k})^{1/k} V(x,R)^{1-1/k} / (Psi(R) E(f,f)), f supported in B(x,R).
// Without kappa: 1 - 1/kappa = beta1 / max(log2 C_VD, 2 beta1).
CertReport certify_sobolev(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                           VertexId x, double R, std::optional<double> kappa, const FunctionFamily& family,
                           std::optional<double> c_vd = {});
double sobolev_kappa(double c_vd, double beta1);

}  // namespace hklab
