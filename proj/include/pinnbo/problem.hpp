#pragma once

#include "pinnbo/common.hpp"
#include "pinnbo/diff_operator.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace pinnbo {

/// A minimization problem with a cheap PDE channel N[f](z) = g(z).
struct Problem {
  std::string name;
  Box domain;
  DiffOperator op;
  std::function<double(const Vec&)> objective;  // noiseless f
  double noise_std = 0.0;
  double pde_noise_std = 0.0;
  std::optional<double> f_star;
  std::optional<Vec> x_star;
  /// Internal values times this sign give the reported quantity (-1 for
  /// problems that are maximized, such as temperature).
  double report_sign = 1.0;

  void validate() const;
  int dim() const { return domain.dim(); }
};

/// Named random streams derived from a run seed with mix_seed.
enum class Stream : std::uint64_t {
  init_points = 1,
  objective_noise = 2,
  pde_noise = 3,
  collocation = 4,
  candidates = 5,
  method = 6,
  network = 7,
};

Rng stream_rng(std::uint64_t seed, Stream stream);

/// Noisy oracle channels of a problem with exact call accounting.
class Oracle {
 public:
  Oracle(const Problem& problem, std::uint64_t seed);

  const Problem& problem() const { return *problem_; }

  /// f(x) + eps, eps ~ N(0, noise_std^2)
  double query(const Vec& x);
  /// g(z) + eta, eta ~ N(0, pde_noise_std^2)
  double pde(const Vec& z);
  /// Noiseless f(x); not counted.
  double clean(const Vec& x) const { return problem_->objective(x); }

  long expensive_calls() const { return expensive_calls_; }
  long pde_calls() const { return pde_calls_; }

 private:
  const Problem* problem_;
  Rng objective_rng_;
  Rng pde_rng_;
  long expensive_calls_ = 0;
  long pde_calls_ = 0;
};

}  // namespace pinnbo
