#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pinnbo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// Raised when a factorization or a numerical routine cannot produce a
/// finite, well-defined result (non-PD kernels, divergence, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned search domain. lo < hi holds per coordinate.
struct Box {
  Vec lo;
  Vec hi;

  Box() = default;
  Box(Vec lower, Vec upper);
  static Box cube(int dim, double lower, double upper);

  int dim() const { return static_cast<int>(lo.size()); }
  double side(int i) const { return hi[i] - lo[i]; }
  double diagonal() const { return (hi - lo).norm(); }
  bool contains(const Vec& x, double tol = 0.0) const;
  Vec clamp(const Vec& x) const;
  Vec sample_uniform(Rng& rng) const;
  /// Box grown by `fraction` of each side length on both ends.
  Box enlarged(double fraction) const;
};

/// Deterministic seed derivation for independent random streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

double normal_draw(Rng& rng);

}  // namespace pinnbo
