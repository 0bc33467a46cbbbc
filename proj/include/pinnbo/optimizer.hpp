#pragma once

#include "pinnbo/ntk_analysis.hpp"
#include "pinnbo/problem.hpp"
#include "pinnbo/surrogate_net.hpp"
#include "pinnbo/training.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pinnbo {

struct IterationRow {
  int t = 0;
  Vec x;
  double y = 0.0;
  double best_y = 0.0;
  double nu = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double interaction = std::numeric_limits<double>::quiet_NaN();
  /// Noiseless f at the incumbent (the point with the best observed y).
  double incumbent_f = 0.0;
  /// incumbent_f - f*, NaN when f* is unknown.
  double regret = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::string method;
  std::string problem;
  std::uint64_t seed = 0;
  int dim = 0;
  std::vector<IterationRow> rows;
  /// Flat key/value snapshot of the configuration that produced the run.
  std::map<std::string, std::string> config;
  long expensive_calls = 0;
  long pde_calls = 0;
  RunDiagnostics diagnostics;
  /// Features at initialization (PINN-BO only); kept in memory, not serialized.
  std::optional<FeatureBank> bank;
  double wall_seconds = 0.0;
};

/// Tracks best-so-far and the incumbent while a method queries its oracle.
class RunTracker {
 public:
  RunTracker(Oracle& oracle, RunRecord& record);

  /// Queries the oracle at x and appends a row; returns y.
  double observe(const Vec& x);
  IterationRow& last() { return record_->rows.back(); }
  const Vec& incumbent() const { return incumbent_; }
  double best_y() const { return best_y_; }
  int t() const { return static_cast<int>(record_->rows.size()); }

 private:
  Oracle* oracle_;
  RunRecord* record_;
  Vec incumbent_;
  double best_y_ = std::numeric_limits<double>::infinity();
};

/// The first `count` queries of every method for a given seed.
std::vector<Vec> initial_points(const Problem& problem, int count, std::uint64_t seed);
int default_init_points(int dim);

struct CandidateOptions {
  int uniform = 2048;
  int local = 32;
  double local_sigma = 0.01;  // fraction of each side
};

/// Fresh uniform samples followed by Gaussian perturbations of `center`
/// (clamped to the box). No local points when `center` is empty.
std::vector<Vec> candidate_set(const Box& box, const Vec& center, const CandidateOptions& opt, Rng& rng);

struct Proposal {
  std::size_t index = 0;
  Vec x;
};

/// argmin of the network over the candidates; ties go to the lowest index.
Proposal propose(const SurrogateParams& params, const std::vector<Vec>& candidates);

/// N_r uniform points away from operator singularities, each observed once
/// through the oracle's PDE channel. Throws NumericalError when more than
/// 99% of draws are rejected.
std::vector<Observation> generate_collocation(const Problem& problem, int n_r, std::uint64_t seed, Oracle& oracle);

/// ceil(c_r (1 + rho_min(K_uu) / l1) / L^2), clamped to [1, max(1, 10 t)].
int suggest_Nr(const KernelBlocks& blocks, double l_estimate, double c_r);

/// Surrogate defaults for the optimizers: inputs mapped onto [1, 5]^d, a
/// wider span than the network default so the initial kernel is less
/// degenerate on low-dimensional boxes.
inline SurrogateConfig optimizer_surrogate() {
  SurrogateConfig c;
  c.map_lo = 1.0;
  c.map_hi = 5.0;
  return c;
}

/// Constant step size; the step itself comes from step_factor.
inline TrainerOptions optimizer_trainer() {
  TrainerOptions t;
  t.lr_decay = 1.0;
  return t;
}

/// Sub-Gaussian scales for targets divided by max |y|.
inline AnalysisConfig optimizer_analysis() {
  AnalysisConfig a;
  a.r1 = 0.3;
  a.r2 = 0.3;
  return a;
}

struct PinnBoConfig {
  int budget = 100;
  int init_points = -1;  // -1: 5 d
  int n_r = 100;
  CandidateOptions candidates;
  int retrain_every = 10;
  int epochs_per_retrain = 300;
  SurrogateConfig surrogate = optimizer_surrogate();
  AnalysisConfig analysis = optimizer_analysis();
  TrainerOptions opt = optimizer_trainer();
  /// Divide y and u by max|y| before training (linear operators only).
  bool scale_targets = true;
  /// When positive, each retrain uses lr = step_factor / (nu^2 lambda_max(J J^T)),
  /// J the loss Jacobian rows at the current parameters; opt.lr is ignored.
  /// GD on the loss is stable below step_factor = 1.
  double step_factor = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  std::map<std::string, std::string> snapshot() const;
};

/// Network config for a problem: input dimension and input box filled in,
/// network seed derived from the run seed.
SurrogateConfig surrogate_for(const Problem& problem, const SurrogateConfig& base, std::uint64_t seed);

/// step_factor / (nu^2 lambda_max(J J^T)) for a Jacobian with one row per
/// residual; the fallback when J is empty or zero.
double curvature_step(const Mat& jacobian, double nu, double step_factor, double fallback);

RunRecord pinn_bo_run(const Problem& problem, const PinnBoConfig& cfg);

}  // namespace pinnbo
