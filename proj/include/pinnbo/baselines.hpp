#pragma once

#include "pinnbo/ntk_analysis.hpp"
#include "pinnbo/optimizer.hpp"
#include "pinnbo/spd_factor.hpp"

#include <vector>

namespace pinnbo {

/// s2 (1 + sqrt5 r / l + 5 r^2 / (3 l^2)) exp(-sqrt5 r / l)
double matern52(double r, double lengthscale, double signal_var);

struct GpHyper {
  double lengthscale = 1.0;
  double signal_var = 1.0;
  double noise_var = 1e-6;
};

/// Zero-mean GP regression with a Matern-5/2 kernel.
class GpModel {
 public:
  GpModel(std::vector<Vec> x, Vec y, GpHyper hyper);

  const GpHyper& hyper() const { return hyper_; }
  std::size_t size() const { return x_.size(); }
  double kernel(const Vec& a, const Vec& b) const;
  Posterior predict(const Vec& x) const;
  double log_marginal_likelihood() const;

 private:
  std::vector<Vec> x_;
  Vec y_;
  GpHyper hyper_;
  SpdFactor factor_;
  Vec alpha_;
};

/// Hyper-parameters by log marginal likelihood over a fixed grid: 24
/// log-spaced lengthscales in [1e-2, 1e1] times the box diagonal and noise
/// in {1e-6, ..., 1e-2} times var(y). Signal variance is mean(y^2).
GpModel gp_fit(const std::vector<Vec>& x, const Vec& y, const Box& box);

/// Expected improvement for minimization.
double ei(double mu, double sigma, double best);
/// Lower confidence bound mu - sqrt(beta) sigma (minimized).
double ucb(double mu, double sigma, double beta);
/// 2 log(t^2 2 pi^2 / (3 delta))
double ucb_beta(int t, double delta);

struct GpBoConfig {
  int budget = 100;
  int init_points = -1;
  CandidateOptions candidates;
  double delta = 0.1;
  std::uint64_t seed = 0;
};

RunRecord gp_ei_run(const Problem& problem, const GpBoConfig& cfg);
RunRecord gp_ucb_run(const Problem& problem, const GpBoConfig& cfg);

/// Same surrogate and schedule as PINN-BO, trained with nu = 1 and no PDE
/// term on targets perturbed by N(0, s^2), s = perturb_fraction * range(y).
RunRecord neural_greedy_run(const Problem& problem, const PinnBoConfig& cfg, double perturb_fraction = 0.1);

RunRecord random_search_run(const Problem& problem, int budget, std::uint64_t seed, int init_points = -1);

}  // namespace pinnbo
