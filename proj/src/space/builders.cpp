#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "hklab/graph.hpp"

namespace hklab {

std::size_t gasket_vertex_count(int level) {
  std::size_t p = 1;
  for (int i = 0; i < level; ++i) p *= 3;
  return 3 * (p + 1) / 2;
}

GraphPtr build_gasket(int level, double renorm, double mass_scale, MetricKind metric) {
  require(level >= 0 && level <= 12, "gasket level out of range");
  const long side = 1L << level;
  using P = std::array<long, 2>;
  std::vector<std::array<P, 3>> tris;
  // recursive subdivision of the lattice triangle (0,0),(side,0),(0,side)
  std::vector<std::pair<P, long>> work{{{0, 0}, side}};
  while (!work.empty()) {
    auto [p, s] = work.back();
    work.pop_back();
    if (s == 1) {
      tris.push_back({P{p[0], p[1]}, P{p[0] + 1, p[1]}, P{p[0], p[1] + 1}});
      continue;
    }
    long h = s / 2;
    work.push_back({{p[0], p[1] + h}, h});
    work.push_back({{p[0] + h, p[1]}, h});
    work.push_back({p, h});
  }
  std::map<P, VertexId> id;
  std::vector<P> pts{{0, 0}, {side, 0}, {0, side}};
  for (std::size_t i = 0; i < 3; ++i) id[pts[i]] = i;
  std::map<P, int> rest;
  for (const auto& t : tris)
    for (const auto& q : t)
      if (!id.count(q)) rest[{q[1], q[0]}] = 0;
  for (const auto& [k, unused] : rest) {
    P q{k[1], k[0]};
    id[q] = pts.size();
    pts.push_back(q);
  }
  const double w = std::pow(renorm, level), mu = std::pow(mass_scale, level);
  const double inv = 1.0 / static_cast<double>(side);
  std::vector<std::vector<double>> coords;
  for (const auto& q : pts)
    coords.push_back({(static_cast<double>(q[0]) + 0.5 * static_cast<double>(q[1])) * inv,
                      static_cast<double>(q[1]) * (std::sqrt(3.0) / 2.0) * inv});
  std::vector<Edge> edges;
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) {
      VertexId a = id[t[static_cast<std::size_t>(i)]], b = id[t[static_cast<std::size_t>((i + 1) % 3)]];
      edges.push_back({std::min(a, b), std::max(a, b), w});
    }
  FamilyInfo info{"gasket", level, {{"renorm", renorm}, {"mass_scale", mass_scale}}};
  Vec measure = Vec::Constant(static_cast<Eigen::Index>(pts.size()), mu);
  return std::make_shared<MetricMeasureGraph>(std::move(coords), std::move(measure), std::move(edges), metric,
                                              inv, std::move(info), metric == MetricKind::graph);
}

GraphPtr build_path(int n, double length, double measure, double conductance) {
  require(n >= 1, "path length must be >= 1");
  if (length <= 0) length = n;
  const double h = length / n;
  if (measure <= 0) measure = h;
  if (conductance <= 0) conductance = 1.0 / h;
  std::vector<std::vector<double>> coords;
  for (int i = 0; i <= n; ++i) coords.push_back({i * h});
  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i) edges.push_back({static_cast<VertexId>(i), static_cast<VertexId>(i + 1), conductance});
  FamilyInfo info{"path", n, {{"length", length}}};
  return std::make_shared<MetricMeasureGraph>(std::move(coords), Vec::Constant(n + 1, measure), std::move(edges),
                                              MetricKind::euclidean, h, std::move(info), true);
}

GraphPtr build_grid(int n, double length) {
  require(n >= 1, "grid side must be >= 1");
  if (length <= 0) length = n;
  const double h = length / n;
  auto idx = [n](int i, int j) { return static_cast<VertexId>(j * (n + 1) + i); };
  std::vector<std::vector<double>> coords;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) coords.push_back({i * h, j * h});
  std::vector<Edge> edges;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      if (i < n) edges.push_back({idx(i, j), idx(i + 1, j), 1.0});
      if (j < n) edges.push_back({idx(i, j), idx(i, j + 1), 1.0});
    }
  FamilyInfo info{"grid", n, {{"length", length}}};
  const auto nv = static_cast<Eigen::Index>((n + 1) * (n + 1));
  return std::make_shared<MetricMeasureGraph>(std::move(coords), Vec::Constant(nv, h * h), std::move(edges),
                                              MetricKind::euclidean, h, std::move(info), true);
}

SpaceSpec SpaceSpec::parse(const std::string& text) {
  require(!text.empty(), "empty space spec");
  SpaceSpec s;
  std::stringstream ss(text);
  std::string item;
  bool first = true;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    auto colon = item.find(':');
    if (first && eq == std::string::npos && colon != std::string::npos) {
      s.family = item.substr(0, colon);
      std::string v = item.substr(colon + 1);
      if (s.family == "file") s.params["path"] = v;
      else {
        for (const char* sq : {"\xC2\xB2", "^2"}) {
          auto p = v.find(sq);
          if (p != std::string::npos) v = v.substr(0, p);
        }
        s.params["size"] = v;
      }
    } else if (eq != std::string::npos) {
      std::string k = item.substr(0, eq), v = item.substr(eq + 1);
      if (k == "family") s.family = v;
      else if (k == "level" || k == "n" || k == "side") s.params["size"] = v;
      else s.params[k] = v;
    } else if (first) {
      s.family = item;
    } else {
      throw Error("malformed space spec item '" + item + "'");
    }
    first = false;
  }
  require(!s.family.empty(), "space spec names no family");
  return s;
}

std::string SpaceSpec::to_string() const {
  std::string out = "family=" + family;
  for (const auto& [k, v] : params) out += "," + k + "=" + v;
  return out;
}

double SpaceSpec::number(const std::string& key, double fallback) const {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  const std::string& v = it->second;
  auto slash = v.find('/');
  if (slash != std::string::npos) return std::stod(v.substr(0, slash)) / std::stod(v.substr(slash + 1));
  return std::stod(v);
}

GraphPtr build_space(const SpaceSpec& spec, const BuildLimits& limits) {
  if (spec.family == "file") {
    auto it = spec.params.find("path");
    require(it != spec.params.end(), "file space spec needs a path");
    std::ifstream in(it->second);
    require(static_cast<bool>(in), "cannot open graph file '" + it->second + "'");
    json j = json::parse(in);
    auto g = graph_from_json(j);
    require(g->size() <= limits.vertex_cap, "graph exceeds the vertex cap");
    return g;
  }
  const int size = static_cast<int>(spec.number("size", -1));
  require(size >= 1, "space spec needs a level/size >= 1");
  if (spec.family == "gasket") {
    require(gasket_vertex_count(size) <= limits.vertex_cap,
            "gasket level " + std::to_string(size) + " exceeds the vertex cap of " + std::to_string(limits.vertex_cap));
    auto m = spec.params.count("metric") ? spec.params.at("metric") : std::string("euclidean");
    require(m == "euclidean" || m == "graph", "unknown metric '" + m + "'");
    return build_gasket(size, spec.number("renorm", 5.0 / 3.0), spec.number("mass_scale", 1.0 / 3.0),
                        m == "graph" ? MetricKind::graph : MetricKind::euclidean);
  }
  if (spec.family == "path") {
    require(static_cast<std::size_t>(size) + 1 <= limits.vertex_cap, "path exceeds the vertex cap");
    return build_path(size, spec.number("length", -1), spec.number("measure", -1), spec.number("conductance", -1));
  }
  if (spec.family == "grid") {
    require(static_cast<std::size_t>(size + 1) * static_cast<std::size_t>(size + 1) <= limits.vertex_cap,
            "grid exceeds the vertex cap");
    return build_grid(size, spec.number("length", -1));
  }
  throw Error("unknown space family '" + spec.family + "'");
}

}  // namespace hklab
