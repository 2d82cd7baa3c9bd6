#include <algorithm>
#include <fstream>
#include <sstream>

#include "hklab/experiment.hpp"
#include "hklab/schedule.hpp"

namespace hklab {

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& v) {
  auto slash = v.find('/');
  std::size_t used = 0;
  double x;
  if (slash != std::string::npos) {
    double a = std::stod(v.substr(0, slash)), b = std::stod(v.substr(slash + 1));
    x = a / b;
    used = v.size();
  } else {
    x = std::stod(v, &used);
  }
  if (used != v.size()) throw std::invalid_argument(v);
  return x;
}

const std::vector<std::string> kAxes = {"level", "resolution", "lambda", "eps", "p"};

}  // namespace

const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s = {"vd",      "rvd", "psi",         "pi",         "wpi",     "pseudo",
                                             "sobolev", "csa", "assumptions", "propagator", "harnack", "hke"};
  return s;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& path) {
  ExperimentConfig c;
  std::stringstream in(text);
  std::string line, section = "general";
  int ln = 0;
  auto fail = [&](const std::string& msg) { throw ConfigError(path + ":" + std::to_string(ln) + ": " + msg); };
  while (std::getline(in, line)) {
    ++ln;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) fail("empty section name");
      static const std::vector<std::string> fixed = {"general", "space", "psi",    "schedule",
                                                     "solver",  "output", "suites", "sweep"};
      if (std::find(fixed.begin(), fixed.end(), section) == fixed.end() &&
          std::find(known_suites().begin(), known_suites().end(), section) == known_suites().end())
        fail("unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) fail("empty key");
    try {
      if (section == "general" || section == "space" || section == "psi" || section == "schedule" ||
          section == "solver" || section == "output" || section == "suites") {
        std::string k = section == "general" ? key : section + "." + key;
        if (k == "seed") c.seed = std::stoull(val);
        else if (k == "space" || k == "space.spec") c.space = val;
        else if (k == "psi" || k == "psi.spec") c.psi = val;
        else if (k == "schedule" || k == "schedule.spec") c.schedule = val;
        else if (k == "solver" || k == "solver.scheme") c.solver = val;
        else if (k == "output" || k == "output.dir") c.output_dir = val;
        else if (k == "suites" || k == "suites.run") {
          c.suites = split(val, ',');
          for (const auto& s : c.suites)
            if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
              fail("unknown suite '" + s + "'");
        } else {
          fail("unknown key '" + key + "' in [" + section + "]");
        }
      } else if (section == "sweep") {
        if (std::find(kAxes.begin(), kAxes.end(), key) == kAxes.end()) fail("unknown sweep axis '" + key + "'");
        std::vector<double> vals;
        for (const auto& v : split(val, ',')) vals.push_back(parse_number(v));
        if (vals.empty()) fail("sweep axis '" + key + "' has no values");
        c.sweeps.push_back({key, vals});
      } else {
        if (std::find(known_suites().begin(), known_suites().end(), section) == known_suites().end())
          fail("unknown section [" + section + "]");
        c.params[section][key] = val;
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail("bad value '" + val + "' for '" + key + "'");
    }
  }
  try {
    SolverConfig::parse(c.solver);
  } catch (const std::exception& e) {
    throw ConfigError(path + ": solver: " + e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return from_json(json::parse(text));
    } catch (const json::exception& e) {
      throw ConfigError(path + ": " + e.what());
    }
  }
  return parse(text, path);
}

json ExperimentConfig::to_json() const {
  json j;
  j["space"] = space;
  j["psi"] = psi;
  j["schedule"] = schedule;
  j["solver"] = solver;
  j["suites"] = suites;
  json sw = json::array();
  for (const auto& [k, v] : sweeps) sw.push_back({{"axis", k}, {"values", v}});
  j["sweeps"] = sw;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["params"] = params;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.space = j.value("space", c.space);
  c.psi = j.value("psi", c.psi);
  c.schedule = j.value("schedule", c.schedule);
  c.solver = j.value("solver", c.solver);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.seed = j.value("seed", c.seed);
  if (j.contains("suites")) c.suites = j["suites"].get<std::vector<std::string>>();
  for (const auto& s : c.suites)
    if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end())
      throw ConfigError("unknown suite '" + s + "'");
  if (j.contains("sweeps"))
    for (const auto& s : j["sweeps"]) {
      auto axis = s.at("axis").get<std::string>();
      if (std::find(kAxes.begin(), kAxes.end(), axis) == kAxes.end()) throw ConfigError("unknown sweep axis '" + axis + "'");
      c.sweeps.push_back({axis, s.at("values").get<std::vector<double>>()});
    }
  if (j.contains("params")) c.params = j["params"].get<std::map<std::string, std::map<std::string, std::string>>>();
  return c;
}

std::string ExperimentConfig::param(const std::string& suite, const std::string& key, const std::string& fallback) const {
  auto it = params.find(suite);
  if (it == params.end()) return fallback;
  auto kt = it->second.find(key);
  return kt == it->second.end() ? fallback : kt->second;
}

double ExperimentConfig::number(const std::string& suite, const std::string& key, double fallback) const {
  std::string v = param(suite, key, "");
  if (v.empty()) return fallback;
  try {
    return parse_number(v);
  } catch (const std::exception&) {
    throw ConfigError("[" + suite + "] " + key + ": not a number: '" + v + "'");
  }
}

ScalingFunction default_psi(const MetricMeasureGraph& g) {
  if (g.family().name == "gasket") return ScalingFunction::power(gasket_walk_dimension());
  return ScalingFunction::power(2.0);
}

FormSchedule parse_schedule(FormPtr form, const std::string& spec) {
  if (spec.empty() || spec == "reference") return reference_schedule(std::move(form));
  if (spec.rfind("file:", 0) == 0) {
    std::ifstream in(spec.substr(5));
    require(static_cast<bool>(in), "cannot open schedule file '" + spec.substr(5) + "'");
    return schedule_from_json(std::move(form), json::parse(in));
  }
  std::string body = spec.rfind("skew:", 0) == 0 ? spec.substr(5) : spec;
  auto colon = body.rfind(':');
  std::string source = colon == std::string::npos ? "default" : body.substr(0, colon);
  std::string lam_text = colon == std::string::npos ? body : body.substr(colon + 1);
  double lambda;
  try {
    lambda = parse_number(lam_text);
  } catch (const std::exception&) {
    throw Error("schedule spec '" + spec + "': bad lambda '" + lam_text + "'");
  }
  HarmonicProfile prof;
  if (source == "default" || source.empty()) {
    auto [b, v] = default_boundary(form->graph());
    prof = harmonic_profile(*form, b, v);
  } else {
    std::ifstream in(source);
    require(static_cast<bool>(in), "cannot open profile file '" + source + "'");
    prof = profile_from_json(*form, json::parse(in));
  }
  return build_nonsymmetric(std::move(form), prof, lambda);
}

}  // namespace hklab
