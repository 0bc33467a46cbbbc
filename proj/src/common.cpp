#include "pinnbo/common.hpp"

#include <cmath>

namespace pinnbo {

Box::Box(Vec lower, Vec upper) : lo(std::move(lower)), hi(std::move(upper)) {
  if (lo.size() != hi.size() || lo.size() == 0) {
    throw std::invalid_argument("Box: bounds must be non-empty and of equal length");
  }
  for (Index i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) {
      throw std::invalid_argument("Box: lower bound must be strictly below upper bound");
    }
  }
}

Box Box::cube(int dim, double lower, double upper) {
  return Box(Vec::Constant(dim, lower), Vec::Constant(dim, upper));
}

bool Box::contains(const Vec& x, double tol) const {
  if (x.size() != lo.size()) return false;
  for (Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo[i] - tol && x[i] <= hi[i] + tol)) return false;
  }
  return true;
}

Vec Box::clamp(const Vec& x) const { return x.cwiseMax(lo).cwiseMin(hi); }

Vec Box::sample_uniform(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec x(lo.size());
  for (Index i = 0; i < x.size(); ++i) x[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
  return x;
}

Box Box::enlarged(double fraction) const {
  Vec pad = fraction * (hi - lo);
  return Box(lo - pad, hi + pad);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

double normal_draw(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  return n01(rng);
}

}  // namespace pinnbo
