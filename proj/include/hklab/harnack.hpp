#pragma once

#include <array>

#include "hklab/cutoff.hpp"
#include "hklab/propagator.hpp"

namespace hklab {

enum class Orientation { plus, minus };
enum class CylinderConvention { tau, hat_sigma };

struct HarnackParams {
  std::array<double, 4> tau{1.0 / 6, 1.0 / 3, 0.5, 1.0};
  double delta = 0.5;

  // "1/6,1/3,1/2,1"
  static std::array<double, 4> parse_tau(const std::string& text);
  void validate() const;
};

// closed time window and open spatial ball B(x, radius)
struct Cylinder {
  double t0 = 0, t1 = 0;
  VertexId center = 0;
  double radius = 0;
  VertexSet vertices;
};

struct CylinderSet {
  Cylinder Q, minus, plus;
  CylinderConvention convention = CylinderConvention::tau;
  std::array<double, 4> sigma{};  // hat-sigma convention only
};

// sigma_1..4 with Psi(sigma_1 r) >= tau_1 Psi(r), Psi(sigma_2 r) <= tau_2 Psi(r), and so on,
// placed a quarter of the way into each admissible interval.
std::array<double, 4> hat_sigma(const HarnackParams& p, const ScalingFunction& Psi);

// Q = (a, a + Psi(r)) x B(x,r); Q-/Q+ use tau_i Psi(r) or Psi(sigma_i r).
// With dt > 0, throws when a window holds no grid point k dt.
CylinderSet make_cylinders(const MetricMeasureGraph& g, VertexId x, double a, double r, const ScalingFunction& Psi,
                           const HarnackParams& params, CylinderConvention conv = CylinderConvention::tau,
                           double dt = 0.0);

// I^-_sigma x delta B = (a - sigma Psi(r), a) x B(x, delta r), or I^+_sigma = (a, a + sigma Psi(r)).
Cylinder sigma_cylinder(const MetricMeasureGraph& g, VertexId x, double a, double r, const ScalingFunction& Psi,
                        double sigma, double delta, Orientation o);

// grid indices of traj inside [c.t0, c.t1]
std::vector<std::size_t> window_indices(const Trajectory& traj, const Cylinder& c);
// int_{t0}^{t1} of the piecewise-linear interpolant of values over traj.times
double integrate_window(const std::vector<double>& times, const std::vector<double>& values, double t0, double t1);

struct EstimateSpec {
  VertexId x = 0;
  double a = 0, r = 0;
  double sigma_p = 0.5, sigma = 1.0;  // sigma' < sigma
  double delta_p = 0.25, delta = 0.5; // delta' < delta
  Orientation orientation = Orientation::minus;
  double a1 = 0.5;
  double C2 = 0, C3 = 0;
  std::optional<double> eps_floor;  // default 1e-12 sup u where a floor is used
};

// LHS = sup_t int u^p psi^2 + a1 int int psi^2 dGamma(u^{p/2}, u^{p/2}) over I_{sigma'},
// RHS = int int_{I_sigma x delta B} u^p. Floor u + eps for p < 1.
CertReport energy_estimate_check(const FormSchedule& schedule, const Trajectory& traj, const CutoffFunction& psi,
                                 double p, const ScalingFunction& Psi, const EstimateSpec& spec);

struct MveSpec {
  EstimateSpec base;
  double A1p = 1.0, A2p = 0.0;  // A_1', A_2'
  double kappa = 2.0;
};

// A = sup_{Q'} u^p Psi(r) mu(B) / (prefactor bracket^{(2k-1)/(k-1)} int int_Q u^p)
CertReport mve_check(const MetricMeasureGraph& g, const Trajectory& traj, double p, const ScalingFunction& Psi,
                     const MveSpec& spec);
double mve_bracket(double p, double beta2, const MveSpec& spec, const ScalingFunction& Psi);

// sup over lambda of lambda mu_bar{K : +-(log u_eps + c) > lambda} / (Psi(r) mu(B)),
// c = -int log u_eps(a) psi^2 / int psi^2.
CertReport log_lemma_stat(const MetricMeasureGraph& g, const Trajectory& traj, const ScalingFunction& Psi,
                          VertexId x, double a, double r, double sigma, double delta, Orientation o,
                          std::optional<double> eps_floor = {}, std::vector<double> lambda_grid = {});

// Dirichlet kernel columns on B(x,r) started at a from the given sources.
std::vector<Trajectory> phi_family(const FormSchedule& schedule, VertexId x, double a, double r,
                                   const ScalingFunction& Psi, const std::vector<VertexId>& sources,
                                   const SolverConfig& cfg);
// nonnegative random data on B(x,r), evolved globally
std::vector<Trajectory> random_phi_family(const FormSchedule& schedule, VertexId x, double a, double r,
                                          const ScalingFunction& Psi, std::size_t count, const SolverConfig& cfg,
                                          std::uint64_t seed);

// C_PHI = max sup_{Q-} u / inf_{Q+} u; the hat-sigma value is reported alongside.
CertReport phi_estimate(const MetricMeasureGraph& g, const std::vector<Trajectory>& family, VertexId x, double a,
                        double r, const ScalingFunction& Psi, const HarnackParams& params);

struct HolderSpec {
  VertexId x = 0;
  double a = 0, r = 0;
  double delta = 0.5;
  double budget = 10.0;
  std::size_t max_pairs = 200000;
  std::uint64_t seed = 11;
};

// Modulus of continuity on Q' = (a + Psi((1-delta) r), a + Psi(r)) x delta B against
// rho = Psi^{-1}(|t - t'|) + d(y,y'); slope of the dyadic log-log modulus, capped to [0,1].
CertReport holder_estimate(const MetricMeasureGraph& g, const Trajectory& traj, const ScalingFunction& Psi,
                           const HolderSpec& spec);

// sigma_j = 1 - (1 - sigma*)/(1 + j), j = 0..n
std::vector<double> bombieri_schedule(double sigma_star, int n);

}  // namespace hklab
