#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hklab/graph.hpp"
#include "hklab/propagator.hpp"
#include "hklab/scaling.hpp"

namespace hklab {

inline constexpr const char* kSchemaVersion = "1.0";

struct ConfigError : Error {
  using Error::Error;
};

// Text config: "key = value" lines under "[section]" headers, '#' comments.
// Keys outside a section live in "general".
struct ExperimentConfig {
  std::string space = "path:8";
  std::string psi;            // empty: gasket walk dimension for gaskets, power:2 otherwise
  std::string schedule = "reference";  // reference | skew:<lambda> | skew:<profile.json>:<lambda> | file:<schedule.json>
  std::string solver = "be";
  std::vector<std::string> suites;
  std::vector<std::pair<std::string, std::vector<double>>> sweeps;  // axis order as written
  std::string output_dir = "hklab-out";
  std::uint64_t seed = 1;
  std::map<std::string, std::map<std::string, std::string>> params;  // per-suite sections

  static ExperimentConfig parse(const std::string& text, const std::string& path = "<config>");
  static ExperimentConfig load(const std::string& path);  // text, or JSON when the file starts with '{'
  static ExperimentConfig from_json(const json& j);
  json to_json() const;

  std::string param(const std::string& suite, const std::string& key, const std::string& fallback) const;
  double number(const std::string& suite, const std::string& key, double fallback) const;
};

const std::vector<std::string>& known_suites();

// default Psi for a space: gasket walk dimension on gaskets, r^2 elsewhere
ScalingFunction default_psi(const MetricMeasureGraph& g);
// reference | skew:<lambda> | skew:default:<lambda> | skew:<profile.json>:<lambda> | <profile.json>:<lambda> | file:<schedule.json>
FormSchedule parse_schedule(FormPtr form, const std::string& spec);

// Resolved experiment at one sweep point.
struct ExperimentPoint {
  std::map<std::string, double> axes;
  SpaceSpec space;
  GraphPtr graph;
  FormPtr form;
  ScalingFunction Psi;
  std::optional<FormSchedule> schedule;
  SolverConfig solver;
  std::uint64_t seed = 1;
  double eps = 0.125;  // layered cutoff epsilon
  double p = 2.0;      // exponent for energy / mean-value suites
};

// Standard ball of a suite: center vertex, R, r (config keys center, R, r; defaults radius/4).
BallTriple suite_ball(const ExperimentConfig& cfg, const std::string& suite, const MetricMeasureGraph& g);

// Runs one suite; earlier results of the same point are visible through `done`.
std::vector<CertReport> run_suite(const std::string& suite, const ExperimentConfig& cfg, const ExperimentPoint& pt,
                                  const std::map<std::string, std::vector<CertReport>>& done);

struct ReportBundle {
  json bundle;
  int exit_code = 0;
};

std::vector<ExperimentPoint> expand_points(const ExperimentConfig& cfg);
// suites in dependency order
std::vector<std::string> ordered_suites(const std::vector<std::string>& requested);
ReportBundle run_experiment(const ExperimentConfig& cfg);
// bundle.json and one CSV per suite into cfg.output_dir
void write_bundle(const ReportBundle& b, const ExperimentConfig& cfg);
json load_bundle(const std::string& path);  // rejects unknown major schema versions
std::string suite_csv(const json& bundle, const std::string& suite);

// kernel-profile | phi-vs-lambda | constant-vs-level
std::string emit_plot_data(const json& bundle, const std::string& kind);

// exit status for a set of reports: 2 when any failed or is infeasible
int exit_code_for(const json& bundle);

}  // namespace hklab
