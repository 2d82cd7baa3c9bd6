#pragma once

#include <optional>

#include "hklab/forms.hpp"
#include "hklab/scaling.hpp"

namespace hklab {

enum class CutoffKind { plateau, layered };

struct CutoffFunction {
  Vec values;
  VertexId center = 0;
  double R = 0, r = 0;
  std::optional<double> epsilon;
  std::optional<double> c0;
  std::string family_id;
  CutoffKind kind = CutoffKind::plateau;
  double lambda = 0;     // layered: log(1 + sqrt(eps/c1))
  int n_layers = 1;      // layers actually used, tail included
  double r_prime = 0;    // layered: total width sum s_n

  VertexSet annulus(const MetricMeasureGraph& g) const;
  // C0 eps^{1 - beta2/2}
  double c0_eps(const ScalingFunction& psi) const;
};

// clamp((R + r - d(x,y))/r, 0, 1); throws on an empty annulus unless allowed.
CutoffFunction plateau_cutoff(const MetricMeasureGraph& g, VertexId x, double R, double r, bool allow_empty = false);

// Annulus-layered cutoff with b_n = e^{-n lambda}, s_n = r'(1-q) q^{n-1}, q = e^{-lambda/beta2}.
// Layers narrower than the mesh are merged into one tail layer carrying weight b_N.
CutoffFunction layered_cutoff(const MetricMeasureGraph& g, VertexId x, double R, double r, double eps, double c1,
                              double c2, const ScalingFunction& psi, double r_ratio = 0.75);

// max(0, LHS - w E_A(f)) / int_A psi f^2 for one f (inf if the denominator vanishes).
double csa_zero_order(const ReferenceForm& form, const CutoffFunction& psi, const Vec& f, double w);

CertReport certify_csa(const MetricMeasureGraph& g, const ReferenceForm& form, const CutoffFunction& psi,
                       const ScalingFunction& Psi, const FunctionFamily& family);
// certify_csa and store the constant in psi
CertReport attach_csa(const ReferenceForm& form, CutoffFunction& psi, const ScalingFunction& Psi,
                      const FunctionFamily& family);

struct LayerConstants {
  double c1 = 0, c2 = 0;
  std::vector<double> widths;
};

// min c1 + c2 subject to int_A f^2 dGamma(psi_s,psi_s) <= c1 int_A dGamma(f,f) + (c2/Psi(s)) int_A f^2
// over plateau layers of the given widths and the family.
LayerConstants measure_layer_constants(const MetricMeasureGraph& g, const ReferenceForm& form, const ScalingFunction& Psi,
                                       VertexId x, double R, const std::vector<double>& widths,
                                       const FunctionFamily& family);

CertReport exp_cutoff_check(const ReferenceForm& form, const CutoffFunction& psi, const ScalingFunction& Psi, double M,
                            const Vec& f);

json cutoff_to_json(const CutoffFunction& c);

}  // namespace hklab
