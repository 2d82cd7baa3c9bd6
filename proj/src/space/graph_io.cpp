#include <map>

#include "hklab/graph.hpp"

namespace hklab {

GraphPtr graph_from_json(const json& j) {
  require(j.contains("vertices") && j.contains("edges"), "graph JSON needs 'vertices' and 'edges'");
  std::map<long long, VertexId> index;
  std::vector<std::vector<double>> coords;
  std::vector<double> mu;
  bool any_coords = false;
  for (const auto& v : j["vertices"]) {
    long long id = v.at("id").get<long long>();
    require(!index.count(id), "duplicate vertex id " + std::to_string(id));
    index[id] = mu.size();
    mu.push_back(v.at("measure").get<double>());
    if (v.contains("coords")) {
      coords.push_back(v["coords"].get<std::vector<double>>());
      any_coords = true;
    } else {
      coords.push_back({});
    }
  }
  std::vector<Edge> edges;
  for (const auto& e : j["edges"]) {
    auto a = e.at("a").get<long long>(), b = e.at("b").get<long long>();
    require(index.count(a) && index.count(b), "edge references unknown vertex");
    edges.push_back({index[a], index[b], e.at("conductance").get<double>()});
  }
  std::string metric = j.value("metric", any_coords ? "euclidean" : "graph");
  require(metric == "euclidean" || metric == "graph", "unknown metric '" + metric + "'");
  double mesh = j.value("mesh", 1.0);
  Vec m(static_cast<Eigen::Index>(mu.size()));
  for (std::size_t i = 0; i < mu.size(); ++i) m[static_cast<Eigen::Index>(i)] = mu[i];
  if (!any_coords) coords.clear();
  FamilyInfo info{j.value("family", std::string("custom")), j.value("size", 0), {}};
  bool geodesic = j.value("geodesic", metric == "graph");
  return std::make_shared<MetricMeasureGraph>(std::move(coords), std::move(m), std::move(edges),
                                              metric == "graph" ? MetricKind::graph : MetricKind::euclidean, mesh,
                                              std::move(info), geodesic);
}

json graph_to_json(const MetricMeasureGraph& g) {
  json j;
  j["family"] = g.family().name;
  j["size"] = g.family().size;
  j["metric"] = g.metric() == MetricKind::graph ? "graph" : "euclidean";
  j["mesh"] = g.mesh();
  j["geodesic"] = g.geodesic();
  json vs = json::array();
  for (std::size_t i = 0; i < g.size(); ++i) {
    json v{{"id", i}, {"measure", g.measure()[static_cast<Eigen::Index>(i)]}};
    if (g.has_coords()) v["coords"] = g.coords()[i];
    vs.push_back(v);
  }
  j["vertices"] = vs;
  json es = json::array();
  for (const auto& e : g.edges()) es.push_back({{"a", e.a}, {"b", e.b}, {"conductance", e.conductance}});
  j["edges"] = es;
  return j;
}

}  // namespace hklab
