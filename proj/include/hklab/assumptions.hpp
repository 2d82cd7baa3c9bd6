#pragma once

#include "hklab/cutoff.hpp"
#include "hklab/schedule.hpp"

namespace hklab {

// One sample time per window (midpoint, or an interior point of an unbounded window).
std::vector<double> window_times(const FormSchedule& s);

// l(uf,v) - l(u,fv) - l(f,uv)
double product_rule_defect(const Decomposition& d, const Vec& u, const Vec& f, const Vec& v);
// sum_x |v(x)| |l(uf,d_x) - f(x) l(u,d_x) - u(x) l(f,d_x)|
double product_rule_defect_l1(const Decomposition& d, const Vec& u, const Vec& f, const Vec& v);
// sum_x |v(x)| |l(Phi(u),d_x) - Phi'(u(x)) l(u,d_x)|
double l_chain_rule_defect_l1(const Decomposition& d, const ScalarMap& phi, const Vec& u, const Vec& v);

// C* (exact operator norm against ||.||_F), the (iii) sandwich constant over the family,
// a feasible (alpha, c) for (vi), C10, and the l product/chain defects over the family.
CertReport verify_assumption0(const FormSchedule& schedule, const FunctionFamily& family,
                              std::vector<double> times = {});

// Reports for the two skew assumptions and the Davies variant, in that order.
// Constants come from min C11 + Ca + Cb subject to every sampled inequality.
std::vector<CertReport> verify_skew_assumptions(const FormSchedule& schedule, const std::vector<CutoffFunction>& cutoffs,
                                                const ScalingFunction& Psi, const FunctionFamily& family,
                                                std::vector<double> times = {},
                                                const std::vector<double>& davies_M = {1.0, 2.0, 4.0});

}  // namespace hklab
