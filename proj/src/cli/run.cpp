#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hklab/experiment.hpp"

namespace hklab {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string lambda_schedule(const std::string& base, double lambda) {
  if (base.empty() || base == "reference") return "skew:default:" + fmt(lambda);
  if (base.rfind("file:", 0) == 0) throw ConfigError("lambda sweep needs a skew schedule, not a schedule file");
  std::string body = base.rfind("skew:", 0) == 0 ? base.substr(5) : base;
  auto colon = body.rfind(':');
  std::string source = colon == std::string::npos ? "default" : body.substr(0, colon);
  return "skew:" + source + ":" + fmt(lambda);
}

}  // namespace

std::vector<std::string> ordered_suites(const std::vector<std::string>& requested) {
  static const std::vector<std::string> order = {"vd",  "rvd",    "psi",     "assumptions", "csa",     "pi",
                                                 "wpi", "pseudo", "sobolev", "propagator",  "harnack", "hke"};
  std::vector<std::string> out;
  for (const auto& s : order)
    if (std::find(requested.begin(), requested.end(), s) != requested.end()) out.push_back(s);
  for (const auto& s : requested)
    if (std::find(order.begin(), order.end(), s) == order.end()) throw ConfigError("unknown suite '" + s + "'");
  return out;
}

std::vector<ExperimentPoint> expand_points(const ExperimentConfig& cfg) {
  std::vector<std::map<std::string, double>> combos(1);
  for (const auto& [axis, vals] : cfg.sweeps) {
    std::vector<std::map<std::string, double>> next;
    for (const auto& c : combos)
      for (double v : vals) {
        auto m = c;
        m[axis] = v;
        next.push_back(m);
      }
    combos = std::move(next);
  }
  std::vector<ExperimentPoint> out;
  for (const auto& axes : combos) {
    ExperimentPoint pt;
    pt.axes = axes;
    pt.seed = cfg.seed;
    pt.space = SpaceSpec::parse(cfg.space);
    std::string sched = cfg.schedule;
    for (const auto& [axis, v] : axes) {
      if (axis == "level" || axis == "resolution") pt.space.params["size"] = std::to_string(static_cast<long long>(std::llround(v)));
      else if (axis == "lambda") sched = lambda_schedule(cfg.schedule, v);
      else if (axis == "eps") pt.eps = v;
      else if (axis == "p") pt.p = v;
    }
    pt.graph = build_space(pt.space);
    pt.form = std::make_shared<const ReferenceForm>(pt.graph);
    pt.Psi = cfg.psi.empty() ? default_psi(*pt.graph) : ScalingFunction::parse(cfg.psi);
    pt.schedule = parse_schedule(pt.form, sched);
    pt.solver = SolverConfig::parse(cfg.solver);
    out.push_back(std::move(pt));
  }
  return out;
}

int exit_code_for(const json& bundle) {
  for (const auto& p : bundle.value("points", json::array()))
    for (const auto& [suite, reps] : p.at("suites").items())
      for (const auto& r : reps) {
        auto s = r.at("status").get<std::string>();
        if (s == "fail" || s == "infeasible") return 2;
      }
  return 0;
}

ReportBundle run_experiment(const ExperimentConfig& cfg) {
  ReportBundle b;
  b.bundle["schema"] = kSchemaVersion;
  b.bundle["seed"] = cfg.seed;
  b.bundle["config"] = cfg.to_json();
  b.bundle["config"].erase("output_dir");
  json points = json::array();
  auto suites = ordered_suites(cfg.suites);
  if (!suites.empty()) {
    auto pts = expand_points(cfg);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& pt = pts[i];
      json jp;
      jp["index"] = i;
      jp["axes"] = pt.axes;
      jp["space"] = pt.space.to_string();
      jp["psi"] = pt.Psi.describe();
      jp["schedule"] = pt.schedule->id();
      jp["solver"] = pt.solver.describe();
      jp["vertices"] = pt.graph->size();
      std::map<std::string, std::vector<CertReport>> done;
      json js = json::object();
      for (const auto& s : suites) {
        std::vector<CertReport> reps;
        try {
          reps = run_suite(s, cfg, pt, done);
        } catch (const ConfigError&) {
          throw;
        } catch (const std::exception& e) {
          CertReport r;
          r.inequality = s;
          r.status = Status::fail;
          r.constant = NAN;
          r.family = s;
          r.notes.push_back(std::string("suite error: ") + e.what());
          reps.push_back(r);
        }
        json arr = json::array();
        for (const auto& r : reps) arr.push_back(to_json(r));
        js[s] = arr;
        done[s] = std::move(reps);
      }
      jp["suites"] = js;
      points.push_back(jp);
    }
  }
  b.bundle["points"] = points;
  b.exit_code = exit_code_for(b.bundle);
  return b;
}

std::string suite_csv(const json& bundle, const std::string& suite) {
  std::vector<std::string> axes;
  for (const auto& s : bundle.at("config").value("sweeps", json::array())) axes.push_back(s.at("axis"));
  std::ostringstream out;
  out << "point";
  for (const auto& a : axes) out << "," << a;
  out << ",inequality,constant,status\n";
  for (const auto& p : bundle.at("points")) {
    if (!p.at("suites").contains(suite)) continue;
    for (const auto& r : p.at("suites").at(suite)) {
      out << p.at("index").get<std::size_t>();
      for (const auto& a : axes) out << "," << fmt(p.at("axes").at(a).get<double>());
      const auto& c = r.at("constant");
      out << "," << r.at("inequality").get<std::string>() << ","
          << (c.is_number() ? fmt(c.get<double>()) : c.get<std::string>()) << "," << r.at("status").get<std::string>()
          << "\n";
    }
  }
  return out.str();
}

void write_bundle(const ReportBundle& b, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream out(fs::path(cfg.output_dir) / "bundle.json");
    if (!out) throw Error("cannot write to '" + cfg.output_dir + "'");
    out << b.bundle.dump(2) << "\n";
  }
  for (const auto& s : ordered_suites(cfg.suites)) {
    std::ofstream out(fs::path(cfg.output_dir) / (s + ".csv"));
    out << suite_csv(b.bundle, s);
  }
}

json load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open bundle '" + path + "'");
  json j = json::parse(in);
  std::string v = j.value("schema", std::string());
  auto dot = v.find('.');
  std::string major = v.substr(0, dot);
  std::string ours = std::string(kSchemaVersion).substr(0, std::string(kSchemaVersion).find('.'));
  if (major != ours) throw Error("unsupported bundle schema '" + v + "' (expected major " + ours + ")");
  return j;
}

}  // namespace hklab
