#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "hklab/graph.hpp"
#include "hklab/rng.hpp"

namespace hklab {

MetricMeasureGraph::MetricMeasureGraph(std::vector<std::vector<double>> coords, Vec measure,
                                       std::vector<Edge> edges, MetricKind metric, double mesh,
                                       FamilyInfo info, bool geodesic)
    : coords_(std::move(coords)), measure_(std::move(measure)), edges_(std::move(edges)),
      metric_(metric), mesh_(mesh), info_(std::move(info)), geodesic_(geodesic) {
  const std::size_t n = size();
  require(n >= 1, "graph needs at least one vertex");
  require(mesh_ > 0, "mesh width must be positive");
  for (std::size_t i = 0; i < n; ++i)
    require(measure_[static_cast<Eigen::Index>(i)] > 0, "vertex measure must be positive");
  adj_.assign(n, {});
  for (const auto& e : edges_) {
    require(e.a < n && e.b < n && e.a != e.b, "edge endpoints out of range or loop");
    require(e.conductance > 0, "edge conductance must be positive");
    adj_[e.a].push_back({e.b, e.conductance});
    adj_[e.b].push_back({e.a, e.conductance});
  }
  dist_ = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  if (metric_ == MetricKind::euclidean) {
    require(coords_.size() == n, "euclidean metric needs coordinates for every vertex");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < coords_[i].size(); ++k) {
          double d = coords_[i][k] - coords_[j][k];
          s += d * d;
        }
        double d = std::sqrt(s);
        dist_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        dist_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d;
      }
  }
  // hop distances double as the connectivity check
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<int> hop(n, -1);
    std::queue<std::size_t> q;
    hop[s] = 0;
    q.push(s);
    while (!q.empty()) {
      auto u = q.front();
      q.pop();
      for (const auto& nb : adj_[u])
        if (hop[nb.v] < 0) {
          hop[nb.v] = hop[u] + 1;
          q.push(nb.v);
        }
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (hop[t] < 0) throw Error("graph is not connected");
      if (metric_ == MetricKind::graph)
        dist_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = hop[t] * mesh_;
    }
    if (metric_ == MetricKind::euclidean) break;  // one BFS suffices for connectivity
  }
}

double MetricMeasureGraph::radius() const { return dist_.rowwise().maxCoeff().minCoeff(); }

VertexId MetricMeasureGraph::center_vertex() const {
  Eigen::Index best = 0;
  dist_.rowwise().maxCoeff().minCoeff(&best);
  if (has_coords()) {
    // barycenter of the embedding is the natural center for symmetric families
    std::vector<double> c(coords_[0].size(), 0.0);
    for (const auto& p : coords_)
      for (std::size_t k = 0; k < p.size(); ++k) c[k] += p[k] / static_cast<double>(size());
    return nearest_vertex(c);
  }
  return static_cast<VertexId>(best);
}

VertexId MetricMeasureGraph::nearest_vertex(const std::vector<double>& point) const {
  require(has_coords(), "nearest_vertex needs coordinates");
  VertexId best = 0;
  double bd = INFINITY;
  for (std::size_t i = 0; i < size(); ++i) {
    double s = 0;
    for (std::size_t k = 0; k < point.size() && k < coords_[i].size(); ++k)
      s += (coords_[i][k] - point[k]) * (coords_[i][k] - point[k]);
    if (s < bd - 1e-15) {
      bd = s;
      best = i;
    }
  }
  return best;
}

std::string MetricMeasureGraph::label() const {
  std::ostringstream os;
  os << info_.name << ":" << info_.size;
  return os.str();
}

MetricMeasureGraph MetricMeasureGraph::scaled(double measure_factor, double conductance_factor) const {
  std::vector<Edge> e = edges_;
  for (auto& x : e) x.conductance *= conductance_factor;
  return MetricMeasureGraph(coords_, measure_ * measure_factor, std::move(e), metric_, mesh_, info_, geodesic_);
}

VertexSet ball(const MetricMeasureGraph& g, VertexId x, double r) {
  VertexSet out;
  if (r <= 0) return out;
  const auto row = g.distances().row(static_cast<Eigen::Index>(x));
  for (std::size_t y = 0; y < g.size(); ++y)
    if (row[static_cast<Eigen::Index>(y)] < r) out.push_back(y);
  return out;
}

double set_mass(const MetricMeasureGraph& g, const VertexSet& s) {
  double m = 0;
  for (auto v : s) m += g.measure()[static_cast<Eigen::Index>(v)];
  return m;
}

double volume(const MetricMeasureGraph& g, VertexId x, double r) { return set_mass(g, ball(g, x, r)); }

std::vector<char> indicator_mask(std::size_t n, const VertexSet& s) {
  std::vector<char> m(n, 0);
  for (auto v : s) m[v] = 1;
  return m;
}

double distance_to_complement(const MetricMeasureGraph& g, VertexId x, const VertexSet& s) {
  auto in = indicator_mask(g.size(), s);
  double d = INFINITY;
  for (std::size_t y = 0; y < g.size(); ++y)
    if (!in[y]) d = std::min(d, g.distance(x, y));
  return d;
}

bool is_connected(const MetricMeasureGraph& g, const VertexSet& s) {
  if (s.empty()) return false;
  auto in = indicator_mask(g.size(), s);
  std::vector<char> seen(g.size(), 0);
  std::vector<VertexId> stack{s[0]};
  seen[s[0]] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    auto u = stack.back();
    stack.pop_back();
    for (const auto& nb : g.neighbors(u))
      if (in[nb.v] && !seen[nb.v]) {
        seen[nb.v] = 1;
        ++count;
        stack.push_back(nb.v);
      }
  }
  return count == s.size();
}

void BallFamily::add(VertexId x, double R, double r) {
  require(r > 0 && R > r, "ball triple needs 0 < r < R");
  balls.push_back({x, R, r});
}

void BallFamily::flag_containment(const MetricMeasureGraph& g) {
  contained.clear();
  for (const auto& b : balls) {
    bool ok = 2 * b.R <= scale_cap || !std::isfinite(scale_cap);
    if (region) {
      auto in = indicator_mask(g.size(), *region);
      for (auto v : ball(g, b.center, 2 * b.R)) ok = ok && in[v];
    }
    contained.push_back(ok);
  }
}

double metric_defect(const MetricMeasureGraph& g, std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0;
  const auto n = g.size();
  for (std::size_t k = 0; k < samples; ++k) {
    auto a = rng.below(n), b = rng.below(n), c = rng.below(n);
    worst = std::max(worst, g.distance(a, c) - g.distance(a, b) - g.distance(b, c));
    worst = std::max(worst, std::abs(g.distance(a, b) - g.distance(b, a)));
  }
  return worst;
}

}  // namespace hklab
