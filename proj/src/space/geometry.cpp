#include <cmath>

#include "hklab/geometry.hpp"
#include "hklab/util.hpp"

namespace hklab {

CertReport certify_vd(const MetricMeasureGraph& g, const BallFamily& balls) {
  require(!balls.balls.empty(), "certify_vd: empty ball family");
  CertReport rep;
  rep.inequality = "VD";
  rep.family = "balls:" + std::to_string(balls.balls.size());
  rep.provenance = "exact ball counting";
  double best = -1;
  for (std::size_t i = 0; i < balls.balls.size(); ++i) {
    const auto& b = balls.balls[i];
    double inner = volume(g, b.center, b.R);
    if (!(inner > 0)) throw Error("certify_vd: empty ball at vertex " + std::to_string(b.center));
    double ratio = volume(g, b.center, b.R + b.r) / inner;
    if (ratio > best) {
      best = ratio;
      rep.witness = {{"center", b.center}, {"R", b.R}, {"r", b.r}, {"index", i}};
    }
  }
  rep.constant = best;
  rep.values["nu"] = std::log2(best);
  return rep;
}

std::vector<RvdInstance> nested_rvd_family(VertexId x, const std::vector<double>& radii) {
  std::vector<RvdInstance> out;
  for (double R : radii)
    for (double s : radii)
      if (s < R) out.push_back({x, R, x, s});
  return out;
}

CertReport certify_rvd(const MetricMeasureGraph& g, const std::vector<RvdInstance>& family) {
  require(!family.empty(), "certify_rvd: empty family");
  CertReport rep;
  rep.inequality = "RVD";
  rep.family = "rvd:" + std::to_string(family.size());
  rep.provenance = "ball counting + log-log regression";
  const double total = g.total_mass();
  std::vector<double> lx, ly;
  std::vector<std::pair<double, double>> kept;  // (R/s, ratio)
  std::vector<std::size_t> kept_idx;
  int skipped = 0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& f = family[i];
    require(f.s > 0 && f.R >= f.s, "certify_rvd: instances need 0 < s <= R");
    require(g.distance(f.x, f.y) < f.R, "certify_rvd: y must lie in B(x,R)");
    double vR = volume(g, f.x, f.R), vs = volume(g, f.y, f.s);
    if (vR >= total * (1 - 1e-14)) {
      ++skipped;
      continue;
    }
    kept.emplace_back(f.R / f.s, vR / vs);
    kept_idx.push_back(i);
    if (f.R > f.s) {
      lx.push_back(std::log(f.R / f.s));
      ly.push_back(std::log(vR / vs));
    }
  }
  if (skipped) rep.notes.push_back(std::to_string(skipped) + " instance(s) skipped: ball equals the whole graph");
  require(!kept.empty(), "certify_rvd: every instance covers the whole graph");
  double nu0 = 0.0;
  if (lx.size() >= 2) nu0 = fit_line(lx, ly).slope;
  else if (lx.size() == 1) nu0 = ly[0] / lx[0];
  else rep.notes.push_back("no instance with R > s; exponent not identifiable, reported as 0");
  double c = INFINITY;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    double v = kept[k].second / std::pow(kept[k].first, nu0);
    if (v < c) {
      c = v;
      const auto& f = family[kept_idx[k]];
      rep.witness = {{"x", f.x}, {"R", f.R}, {"y", f.y}, {"s", f.s}};
    }
  }
  rep.constant = c;
  rep.values["nu0"] = nu0;
  rep.values["skipped"] = skipped;
  return rep;
}

}  // namespace hklab
