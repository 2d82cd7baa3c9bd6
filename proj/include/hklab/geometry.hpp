#pragma once

#include "hklab/graph.hpp"

namespace hklab {

CertReport certify_vd(const MetricMeasureGraph& g, const BallFamily& balls);

struct RvdInstance {
  VertexId x;
  double R;
  VertexId y;
  double s;
};

// Fits nu0 by log-log regression over instances with R > s, then the largest
// C_RVD with V(x,R)/V(y,s) >= C_RVD (R/s)^nu0 on every instance.
CertReport certify_rvd(const MetricMeasureGraph& g, const std::vector<RvdInstance>& family);
// Nested balls (center, r, center, s) for every ordered pair of radii.
std::vector<RvdInstance> nested_rvd_family(VertexId x, const std::vector<double>& radii);

}  // namespace hklab
