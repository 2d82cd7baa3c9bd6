#pragma once

#include "hklab/graph.hpp"
#include "hklab/rng.hpp"

namespace hklab {

// Random low-frequency Fourier profiles of the embedding (heat-smoothed noise without one).
FunctionFamily random_smooth_family(const MetricMeasureGraph& g, std::size_t count, Rng& rng);
FunctionFamily random_noise_family(const MetricMeasureGraph& g, std::size_t count, Rng& rng);
FunctionFamily indicator_family(const MetricMeasureGraph& g, const VertexSet& vertices);
// Fixed ambient functions evaluated on the embedding; identical across resolutions.
FunctionFamily ambient_family(const MetricMeasureGraph& g);
// 64 random smooth profiles + indicators (all vertices up to a cap, else a sample).
FunctionFamily default_family(const MetricMeasureGraph& g, Rng& rng, std::size_t max_indicators = 256);

FunctionFamily restrict_family(const FunctionFamily& fam, const MetricMeasureGraph& g, const VertexSet& support);
FunctionFamily positive_part_family(const FunctionFamily& fam);
// f -> shift + |f| / max|f|, uniformly positive
FunctionFamily positive_family(const FunctionFamily& fam, double shift = 0.5);

}  // namespace hklab
