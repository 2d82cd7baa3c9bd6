#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hklab/report.hpp"

namespace hklab {

enum class MetricKind { euclidean, graph };

struct Edge {
  VertexId a, b;
  double conductance;
};

struct Neighbor {
  VertexId v;
  double w;
};

struct FamilyInfo {
  std::string name = "custom";  // gasket | path | grid | custom
  int size = 0;                 // level m, path length n, grid side n
  std::map<std::string, double> params;
};

// Finite connected graph with vertex measure, conductances and an all-pairs metric.
class MetricMeasureGraph {
 public:
  MetricMeasureGraph(std::vector<std::vector<double>> coords, Vec measure, std::vector<Edge> edges,
                     MetricKind metric, double mesh, FamilyInfo info, bool geodesic);

  std::size_t size() const { return static_cast<std::size_t>(measure_.size()); }
  const Vec& measure() const { return measure_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Neighbor>& neighbors(VertexId x) const { return adj_[x]; }
  const std::vector<std::vector<double>>& coords() const { return coords_; }
  bool has_coords() const { return !coords_.empty() && !coords_[0].empty(); }
  double distance(VertexId x, VertexId y) const { return dist_(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)); }
  const Mat& distances() const { return dist_; }
  MetricKind metric() const { return metric_; }
  double mesh() const { return mesh_; }
  const FamilyInfo& family() const { return info_; }
  bool geodesic() const { return geodesic_; }
  double diameter() const { return dist_.maxCoeff(); }
  double total_mass() const { return measure_.sum(); }
  // min over x of max_y d(x,y)
  double radius() const;
  VertexId center_vertex() const;
  VertexId nearest_vertex(const std::vector<double>& point) const;
  std::string label() const;

  MetricMeasureGraph scaled(double measure_factor, double conductance_factor) const;

 private:
  std::vector<std::vector<double>> coords_;
  Vec measure_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adj_;
  Mat dist_;
  MetricKind metric_;
  double mesh_;
  FamilyInfo info_;
  bool geodesic_;
};

using GraphPtr = std::shared_ptr<const MetricMeasureGraph>;

struct SpaceSpec {
  std::string family;
  std::map<std::string, std::string> params;

  // "gasket:3", "path:128", "grid:16", "family=gasket,level=4,metric=graph", "file:g.json"
  static SpaceSpec parse(const std::string& text);
  std::string to_string() const;
  double number(const std::string& key, double fallback) const;
};

struct BuildLimits {
  std::size_t vertex_cap = 5000;
};

GraphPtr build_space(const SpaceSpec& spec, const BuildLimits& limits = {});
GraphPtr build_gasket(int level, double renorm = 5.0 / 3.0, double mass_scale = 1.0 / 3.0,
                      MetricKind metric = MetricKind::euclidean);
GraphPtr build_path(int n, double length = -1.0, double measure = -1.0, double conductance = -1.0);
GraphPtr build_grid(int n, double length = -1.0);
GraphPtr graph_from_json(const json& j);
json graph_to_json(const MetricMeasureGraph& g);

std::size_t gasket_vertex_count(int level);

VertexSet ball(const MetricMeasureGraph& g, VertexId x, double r);
double volume(const MetricMeasureGraph& g, VertexId x, double r);
double set_mass(const MetricMeasureGraph& g, const VertexSet& s);
// min distance from x to a vertex outside s (infinity when s is everything)
double distance_to_complement(const MetricMeasureGraph& g, VertexId x, const VertexSet& s);
std::vector<char> indicator_mask(std::size_t n, const VertexSet& s);
bool is_connected(const MetricMeasureGraph& g, const VertexSet& s);

struct BallTriple {
  VertexId center;
  double R;
  double r;
};

struct BallFamily {
  std::vector<BallTriple> balls;
  std::optional<VertexSet> region;  // working region Y
  double scale_cap = INFINITY;      // R0
  std::vector<bool> contained;      // B(x,2R) within Y

  void add(VertexId x, double R, double r);
  void flag_containment(const MetricMeasureGraph& g);
};

// Checks the metric axioms on sampled triples; returns the worst triangle defect.
double metric_defect(const MetricMeasureGraph& g, std::size_t samples, std::uint64_t seed);

}  // namespace hklab
