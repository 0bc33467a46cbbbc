#include "pinnbo/optimizer.hpp"

#include "pinnbo/spd_factor.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace pinnbo {

RunTracker::RunTracker(Oracle& oracle, RunRecord& record) : oracle_(&oracle), record_(&record) {}

double RunTracker::observe(const Vec& x) {
  const double y = oracle_->query(x);
  if (record_->rows.empty() || y < best_y_) {
    best_y_ = y;
    incumbent_ = x;
  }
  IterationRow row;
  row.t = t() + 1;
  row.x = x;
  row.y = y;
  row.best_y = best_y_;
  row.incumbent_f = oracle_->clean(incumbent_);
  const auto& f_star = oracle_->problem().f_star;
  if (f_star) row.regret = row.incumbent_f - *f_star;
  record_->rows.push_back(std::move(row));
  record_->expensive_calls = oracle_->expensive_calls();
  record_->pde_calls = oracle_->pde_calls();
  return y;
}

int default_init_points(int dim) { return 5 * dim; }

std::vector<Vec> initial_points(const Problem& problem, int count, std::uint64_t seed) {
  Rng rng = stream_rng(seed, Stream::init_points);
  std::vector<Vec> pts;
  pts.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int k = 0; k < count; ++k) pts.push_back(problem.domain.sample_uniform(rng));
  return pts;
}

std::vector<Vec> candidate_set(const Box& box, const Vec& center, const CandidateOptions& opt, Rng& rng) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(opt.uniform + opt.local));
  for (int k = 0; k < opt.uniform; ++k) out.push_back(box.sample_uniform(rng));
  if (center.size() == box.dim()) {
    for (int k = 0; k < opt.local; ++k) {
      Vec x = center;
      for (Index i = 0; i < x.size(); ++i) x[i] += opt.local_sigma * box.side(static_cast<int>(i)) * normal_draw(rng);
      out.push_back(box.clamp(x));
    }
  }
  return out;
}

Proposal propose(const SurrogateParams& params, const std::vector<Vec>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("propose: no candidates");
  std::size_t best = 0;
  double best_value = forward(params, candidates[0]);
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    const double v = forward(params, candidates[k]);
    if (v < best_value) {
      best_value = v;
      best = k;
    }
  }
  return Proposal{best, candidates[best]};
}

std::vector<Observation> generate_collocation(const Problem& problem, int n_r, std::uint64_t seed, Oracle& oracle) {
  if (n_r < 0) throw std::invalid_argument("generate_collocation: N_r must be non-negative");
  Rng rng = stream_rng(seed, Stream::collocation);
  std::vector<Observation> out;
  out.reserve(static_cast<std::size_t>(n_r));
  long draws = 0;
  long rejected = 0;
  while (static_cast<int>(out.size()) < n_r) {
    Vec z = problem.domain.sample_uniform(rng);
    ++draws;
    if (problem.op.is_singular(z)) {
      ++rejected;
      if (draws >= 100 && rejected > 0.99 * static_cast<double>(draws)) {
        throw NumericalError("generate_collocation: more than 99% of draws hit operator singularities");
      }
      continue;
    }
    const double u = oracle.pde(z);
    out.push_back(Observation{std::move(z), u});
  }
  return out;
}

int suggest_Nr(const KernelBlocks& blocks, double l_estimate, double c_r) {
  if (!(l_estimate > 0.0)) throw std::invalid_argument("suggest_Nr: L estimate must be positive");
  const double rho = std::max(0.0, min_eigenvalue(blocks.uu));
  const double raw = c_r * (1.0 + rho / blocks.lambda1) / (l_estimate * l_estimate);
  const double cap = std::max(1.0, 10.0 * static_cast<double>(blocks.t()));
  return static_cast<int>(std::clamp(std::ceil(raw), 1.0, cap));
}

void PinnBoConfig::validate() const {
  if (budget < 1) throw std::invalid_argument("PinnBoConfig: budget must be at least 1");
  if (n_r < 0) throw std::invalid_argument("PinnBoConfig: N_r must be non-negative");
  if (candidates.uniform < 1) throw std::invalid_argument("PinnBoConfig: candidate count must be at least 1");
  if (candidates.local < 0 || !(candidates.local_sigma >= 0.0)) throw std::invalid_argument("PinnBoConfig: bad local candidates");
  if (retrain_every < 1) throw std::invalid_argument("PinnBoConfig: retrain_every must be at least 1");
  if (epochs_per_retrain < 0) throw std::invalid_argument("PinnBoConfig: epochs must be non-negative");
  if (!(step_factor >= 0.0)) throw std::invalid_argument("PinnBoConfig: step_factor must be non-negative");
  analysis.validate();
  opt.validate();
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::map<std::string, std::string> PinnBoConfig::snapshot() const {
  return {
      {"budget", std::to_string(budget)},
      {"init_points", std::to_string(init_points)},
      {"n_r", std::to_string(n_r)},
      {"candidates", std::to_string(candidates.uniform)},
      {"local_candidates", std::to_string(candidates.local)},
      {"local_sigma", num(candidates.local_sigma)},
      {"retrain_every", std::to_string(retrain_every)},
      {"epochs", std::to_string(epochs_per_retrain)},
      {"width", std::to_string(surrogate.width)},
      {"depth", std::to_string(surrogate.depth)},
      {"activation", to_string(surrogate.activation)},
      {"lr", num(opt.lr)},
      {"lr_decay", num(opt.lr_decay)},
      {"r1", num(analysis.r1)},
      {"r2", num(analysis.r2)},
      {"lambda1", num(analysis.lambda1)},
      {"lambda2", num(analysis.lambda2)},
      {"delta", num(analysis.delta)},
      {"nu_min", num(analysis.nu_min)},
      {"scale_targets", scale_targets ? "1" : "0"},
      {"step_factor", num(step_factor)},
      {"map_lo", num(surrogate.map_lo)},
      {"map_hi", num(surrogate.map_hi)},
  };
}

SurrogateConfig surrogate_for(const Problem& problem, const SurrogateConfig& base, std::uint64_t seed) {
  SurrogateConfig sc = base;
  sc.input_dim = problem.dim();
  sc.input_box = problem.domain;
  sc.seed = mix_seed(seed, static_cast<std::uint64_t>(Stream::network));
  sc.validate();
  return sc;
}

double curvature_step(const Mat& jacobian, double nu, double step_factor, double fallback) {
  if (jacobian.rows() == 0) return fallback;
  const double top = max_eigenvalue(symmetrized(jacobian * jacobian.transpose()));
  if (!(top > 0.0) || !std::isfinite(top)) return fallback;
  return step_factor / (nu * nu * top);
}

namespace {

Mat loss_jacobian(const SurrogateParams& params, const ObservationStore& store, const NetworkOperator* op) {
  const std::size_t n_op = op ? store.collocation().size() : 0;
  Mat j(static_cast<Index>(store.expensive().size() + n_op), params.size());
  Index r = 0;
  for (const auto& o : store.expensive()) j.row(r++) = param_gradient(params, o.x).transpose();
  if (op) {
    for (const auto& o : store.collocation()) j.row(r++) = op->feature(params, o.x).transpose();
  }
  return j;
}

ObservationStore scaled_store(const ObservationStore& store, double scale) {
  ObservationStore out(store.domain());
  for (const auto& o : store.expensive()) out.add_expensive(o.x, o.value / scale);
  for (const auto& o : store.collocation()) out.add_collocation(o.x, o.value / scale);
  return out;
}

double target_scale(const ObservationStore& store) {
  double s = 0.0;
  for (const auto& o : store.expensive()) s = std::max(s, std::abs(o.value));
  return s > 1e-12 ? s : 1.0;
}

}  // namespace

RunRecord pinn_bo_run(const Problem& problem, const PinnBoConfig& cfg) {
  problem.validate();
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();

  RunRecord rec;
  rec.method = "pinn_bo";
  rec.problem = problem.name;
  rec.seed = cfg.seed;
  rec.dim = problem.dim();
  rec.config = cfg.snapshot();

  Oracle oracle(problem, cfg.seed);
  const SurrogateParams theta0 = init_params(surrogate_for(problem, cfg.surrogate, cfg.seed));
  SurrogateParams params = theta0;
  const NetworkOperator netop(problem.op, FdScheme::for_domain(problem.domain));
  const AnalysisConfig& an = cfg.analysis;

  ObservationStore store(problem.domain);
  FeatureBank bank(theta0.size());
  for (auto& obs : generate_collocation(problem, cfg.n_r, cfg.seed, oracle)) {
    bank.add_omega(netop.feature(theta0, obs.x));
    store.add_collocation(std::move(obs.x), obs.value);
  }

  const int k_init = std::min(cfg.init_points < 0 ? default_init_points(problem.dim()) : cfg.init_points, cfg.budget);
  const std::vector<Vec> init = initial_points(problem, k_init, cfg.seed);
  Rng cand_rng = stream_rng(cfg.seed, Stream::candidates);
  const bool scale = cfg.scale_targets && problem.op.linear;
  TrainerOptions opt = cfg.opt;
  opt.epochs = cfg.epochs_per_retrain;

  RunTracker tracker(oracle, rec);
  for (int t = 1; t <= cfg.budget; ++t) {
    // nu_t from the t - 1 rows observed so far
    const KernelBlocks blocks = gram_blocks(bank, an.lambda1, an.lambda2);
    const double gamma = info_gain(blocks);
    const double inter = interaction_information(bank, an.lambda1, an.lambda2);
    const double nu = nu_t(gamma, inter, an);

    Vec x = t <= k_init ? init[static_cast<std::size_t>(t - 1)]
                        : propose(params, candidate_set(problem.domain, tracker.incumbent(), cfg.candidates, cand_rng)).x;

    const Vec phi_x = param_gradient(theta0, x);
    const PosteriorModel prior(bank, blocks, Vec::Zero(bank.t()), Vec::Zero(bank.n_r()));
    rec.diagnostics.sigma.push_back(std::sqrt(prior.at(phi_x).variance));

    const double y = tracker.observe(x);
    IterationRow& row = tracker.last();
    row.nu = nu;
    row.gamma = gamma;
    row.interaction = inter;
    rec.diagnostics.gamma.push_back(gamma);
    rec.diagnostics.interaction.push_back(inter);
    rec.diagnostics.nu.push_back(nu);

    store.add_expensive(x, y);
    bank.add_phi(phi_x);

    if (t % cfg.retrain_every == 0 && t < cfg.budget) {
      const double s = scale ? target_scale(store) : 1.0;
      const ObservationStore train_store = s != 1.0 ? scaled_store(store, s) : store;
      if (cfg.step_factor > 0.0) opt.lr = curvature_step(loss_jacobian(params, store, &netop), nu, cfg.step_factor, cfg.opt.lr);
      params = train(params, train_store, &netop, nu, opt).params;
    }
  }

  const KernelBlocks final_blocks = gram_blocks(bank, an.lambda1, an.lambda2);
  rec.diagnostics.i0 = compute_I0(final_blocks);
  rec.diagnostics.omega_norm_max = bank.omega_norm_max();
  rec.bank = std::move(bank);
  rec.expensive_calls = oracle.expensive_calls();
  rec.pde_calls = oracle.pde_calls();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace pinnbo
