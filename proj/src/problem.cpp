#include "pinnbo/problem.hpp"

namespace pinnbo {

void Problem::validate() const {
  if (domain.dim() < 1) throw std::invalid_argument("Problem: empty domain");
  op.validate();
  if (op.dim != domain.dim()) throw std::invalid_argument("Problem: operator dimension differs from the domain");
  if (!objective) throw std::invalid_argument("Problem: missing objective");
  if (!(noise_std >= 0.0) || !(pde_noise_std >= 0.0)) throw std::invalid_argument("Problem: negative noise level");
}

Rng stream_rng(std::uint64_t seed, Stream stream) { return make_rng(seed, static_cast<std::uint64_t>(stream)); }

Oracle::Oracle(const Problem& problem, std::uint64_t seed)
    : problem_(&problem),
      objective_rng_(stream_rng(seed, Stream::objective_noise)),
      pde_rng_(stream_rng(seed, Stream::pde_noise)) {}

double Oracle::query(const Vec& x) {
  if (!problem_->domain.contains(x, 1e-12)) throw std::out_of_range("Oracle: query outside the domain");
  ++expensive_calls_;
  const double eps = normal_draw(objective_rng_);
  return problem_->objective(x) + problem_->noise_std * eps;
}

double Oracle::pde(const Vec& z) {
  if (!problem_->domain.contains(z, 1e-12)) throw std::out_of_range("Oracle: collocation point outside the domain");
  ++pde_calls_;
  const double eta = normal_draw(pde_rng_);
  return problem_->op.rhs(z) + problem_->pde_noise_std * eta;
}

}  // namespace pinnbo
