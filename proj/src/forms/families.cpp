#include <cmath>
#include <numbers>

#include "hklab/families.hpp"

namespace hklab {

namespace {
std::vector<double> embed(const MetricMeasureGraph& g, std::size_t i) {
  std::vector<double> p = g.coords()[i];
  p.resize(2, 0.0);
  return p;
}
}  // namespace

FunctionFamily random_smooth_family(const MetricMeasureGraph& g, std::size_t count, Rng& rng) {
  FunctionFamily fam{"smooth" + std::to_string(count), {}};
  const auto n = static_cast<Eigen::Index>(g.size());
  const double L = std::max(g.diameter(), g.mesh());
  for (std::size_t k = 0; k < count; ++k) {
    Vec f = Vec::Zero(n);
    if (g.has_coords()) {
      for (int mode = 0; mode < 3; ++mode) {
        double amp = rng.uniform(-1, 1);
        double kx = std::floor(rng.uniform(0, 3)), ky = std::floor(rng.uniform(0, 3));
        double ph = rng.uniform(0, 2 * std::numbers::pi);
        for (Eigen::Index i = 0; i < n; ++i) {
          auto p = embed(g, static_cast<std::size_t>(i));
          f[i] += amp * std::cos(std::numbers::pi * (kx * p[0] + ky * p[1]) / L + ph);
        }
      }
    } else {
      Vec noise(n);
      for (Eigen::Index i = 0; i < n; ++i) noise[i] = rng.uniform(-1, 1);
      // a few Jacobi-type averaging sweeps
      for (int sweep = 0; sweep < 8; ++sweep) {
        Vec next = noise;
        for (Eigen::Index i = 0; i < n; ++i) {
          double s = noise[i], w = 1.0;
          for (const auto& nb : g.neighbors(static_cast<VertexId>(i))) {
            s += noise[static_cast<Eigen::Index>(nb.v)];
            w += 1.0;
          }
          next[i] = s / w;
        }
        noise = next;
      }
      f = noise;
    }
    fam.members.push_back(f);
  }
  return fam;
}

FunctionFamily random_noise_family(const MetricMeasureGraph& g, std::size_t count, Rng& rng) {
  FunctionFamily fam{"noise" + std::to_string(count), {}};
  const auto n = static_cast<Eigen::Index>(g.size());
  for (std::size_t k = 0; k < count; ++k) {
    Vec f(n);
    for (Eigen::Index i = 0; i < n; ++i) f[i] = rng.uniform(-1, 1);
    fam.members.push_back(f);
  }
  return fam;
}

FunctionFamily indicator_family(const MetricMeasureGraph& g, const VertexSet& vertices) {
  FunctionFamily fam{"indicators" + std::to_string(vertices.size()), {}};
  for (auto v : vertices) {
    Vec f = Vec::Zero(static_cast<Eigen::Index>(g.size()));
    f[static_cast<Eigen::Index>(v)] = 1.0;
    fam.members.push_back(f);
  }
  return fam;
}

FunctionFamily ambient_family(const MetricMeasureGraph& g) {
  require(g.has_coords(), "ambient family needs an embedding");
  FunctionFamily fam{"ambient", {}};
  const auto n = static_cast<Eigen::Index>(g.size());
  using F = double (*)(double, double);
  const F fs[] = {
      [](double, double) { return 1.0; },
      [](double x, double) { return x; },
      [](double x, double y) { return x + 2 * y; },
      [](double x, double y) { return x * x + y; },
      [](double x, double y) { return std::sin(std::numbers::pi * x) * std::cos(std::numbers::pi * y); },
      [](double x, double y) { return std::exp(-4 * ((x - 0.5) * (x - 0.5) + (y - 0.3) * (y - 0.3))); },
      [](double x, double y) { return std::cos(2 * std::numbers::pi * x) + std::sin(std::numbers::pi * y); },
      [](double x, double y) { return 1.0 + x * y; },
  };
  for (auto f : fs) {
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto p = embed(g, static_cast<std::size_t>(i));
      v[i] = f(p[0], p[1]);
    }
    fam.members.push_back(v);
  }
  return fam;
}

FunctionFamily default_family(const MetricMeasureGraph& g, Rng& rng, std::size_t max_indicators) {
  FunctionFamily fam = random_smooth_family(g, 64, rng);
  VertexSet vs;
  if (g.size() <= max_indicators) {
    for (std::size_t i = 0; i < g.size(); ++i) vs.push_back(i);
  } else {
    for (std::size_t k = 0; k < max_indicators; ++k) vs.push_back(k * g.size() / max_indicators);
  }
  fam.append(indicator_family(g, vs));
  return fam;
}

FunctionFamily restrict_family(const FunctionFamily& fam, const MetricMeasureGraph& g, const VertexSet& support) {
  auto in = indicator_mask(g.size(), support);
  FunctionFamily out{fam.id + "|restricted", {}};
  for (const auto& f : fam.members) {
    Vec r = f;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (!in[static_cast<std::size_t>(i)]) r[i] = 0.0;
    if (r.cwiseAbs().maxCoeff() > 0) out.members.push_back(r);
  }
  return out;
}

FunctionFamily positive_part_family(const FunctionFamily& fam) {
  FunctionFamily out{fam.id + "|abs", {}};
  for (const auto& f : fam.members) out.members.push_back(f.cwiseAbs());
  return out;
}

FunctionFamily positive_family(const FunctionFamily& fam, double shift) {
  FunctionFamily out{fam.id + "|positive", {}};
  for (const auto& f : fam.members) {
    double m = f.cwiseAbs().maxCoeff();
    Vec g = Vec::Constant(f.size(), shift);
    if (m > 0) g += f.cwiseAbs() / m;
    out.members.push_back(g);
  }
  return out;
}

}  // namespace hklab
