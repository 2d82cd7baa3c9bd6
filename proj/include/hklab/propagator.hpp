#pragma once

#include <map>
#include <optional>

#include "hklab/schedule.hpp"

namespace hklab {

enum class Scheme { backward_euler, theta, exact };

struct SolverConfig {
  Scheme scheme = Scheme::backward_euler;
  double theta = 1.0;     // used by Scheme::theta
  double dt = 1.0 / 64;   // global grid k*dt + anchor
  double anchor = 0.0;
  double rcond_min = 1e-14;

  // "be", "be:dt=0.01", "theta:0.5,dt=0.01", "exact"
  static SolverConfig parse(const std::string& text);
  double effective_theta() const { return scheme == Scheme::backward_euler ? 1.0 : theta; }
  std::string describe() const;
  json to_json() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> snapshots;
  std::string schedule_id;
  Vec initial;

  double span() const { return times.back() - times.front(); }
};

struct KernelMatrix {
  double s = 0, t = 0;
  Mat p;                           // p(t, y, s, x) at (y, x)
  std::optional<VertexSet> domain; // dirichlet(U) when set
  std::vector<double> grid;
  std::string schedule_id;
  std::string scheme;
};

// Time stepping for u' = L_t u, L_t = -M^{-1} B_t, optionally killed outside U.
class Propagator {
 public:
  Propagator(const FormSchedule& schedule, SolverConfig cfg, std::optional<VertexSet> domain = {});

  const FormSchedule& schedule() const { return schedule_; }
  const SolverConfig& config() const { return cfg_; }
  const std::optional<VertexSet>& domain() const { return domain_; }

  // s, t, grid points and window boundaries strictly between them
  std::vector<double> grid(double s, double t) const;
  // full-size operator f -> u(t) (zero rows/columns outside U)
  Mat transition(double s, double t) const;
  Trajectory solve(const Vec& f, double s, double T) const;
  KernelMatrix kernel(double s, double t) const;
  // every step used on [s,t] had an M-matrix implicit part and a nonnegative explicit part
  bool m_matrix(double s, double t) const;

 private:
  struct Step {
    Mat S;
    bool m_matrix;
  };
  const Step& step(std::size_t window, double h) const;

  FormSchedule schedule_;
  SolverConfig cfg_;
  std::optional<VertexSet> domain_;
  VertexSet active_;  // U, or all vertices
  Vec mu_;            // local measure
  std::vector<Mat> B_;  // local form matrices
  mutable std::map<std::pair<std::size_t, long long>, Step> cache_;
  mutable std::map<std::size_t, std::pair<Vec, Mat>> spectral_;
};

Trajectory solve_ivp(const FormSchedule& schedule, const Vec& f, double s, double T, const SolverConfig& cfg);
Mat transition(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg);
KernelMatrix kernel(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg,
                    std::optional<VertexSet> domain = {});
// Kernel of the adjoint schedule on [s,t], run on the mirrored grid; equals the transpose of kernel().
KernelMatrix adjoint_kernel(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg,
                            std::optional<VertexSet> domain = {});

// L2(mu) operator norm of T^s_t
double l2_norm(const Mat& T, const Vec& mu);
// measured norm against exp((alpha - c)(t - s)) (1 + 1e-9)
CertReport contraction_check(const FormSchedule& schedule, double s, double t, const SolverConfig& cfg, double alpha,
                             double c);

CertReport check_chapman_kolmogorov(const KernelMatrix& k_sr, const KernelMatrix& k_rt, const KernelMatrix& k_st,
                                    const Vec& mu);
CertReport check_positivity(const KernelMatrix& k, std::optional<bool> m_matrix = {}, double tol = 1e-10);

// (1/h) int_t^{t+h} u on the piecewise-linear interpolant, at every grid time with t + h <= T
Trajectory steklov_average(const Trajectory& traj, double h);

// Per-step residual mu (u_{n+1} - u_n) + dt B (theta u_{n+1} + (1 - theta) u_n) on the rows of U.
std::vector<Vec> step_residuals(const FormSchedule& schedule, const Trajectory& traj, const VertexSet& U, double theta);

CertReport check_max_principle(const FormSchedule& schedule, const Trajectory& traj, const VertexSet& U,
                               const SolverConfig& cfg, double tol = 1e-10);
CertReport check_super_mean_value(const FormSchedule& schedule, const Trajectory& traj, const VertexSet& U,
                                  const SolverConfig& cfg, double tol = 1e-10);
CertReport check_caloric_axioms(const FormSchedule& schedule, const VertexSet& U, double s, double T,
                                const SolverConfig& cfg, std::uint64_t seed = 7, double tol = 1e-9);

// binary container: "HKMAT1", uint64 rows, uint64 cols, row-major doubles; header as JSON alongside
void write_kernel(const KernelMatrix& k, const std::string& path_prefix);
KernelMatrix read_kernel(const std::string& path_prefix);
json kernel_header(const KernelMatrix& k);

}  // namespace hklab
