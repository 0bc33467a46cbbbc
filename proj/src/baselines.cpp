#include "pinnbo/baselines.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

namespace pinnbo {

double matern52(double r, double lengthscale, double signal_var) {
  const double a = std::sqrt(5.0) * r / lengthscale;
  return signal_var * (1.0 + a + a * a / 3.0) * std::exp(-a);
}

GpModel::GpModel(std::vector<Vec> x, Vec y, GpHyper hyper) : x_(std::move(x)), y_(std::move(y)), hyper_(hyper) {
  if (x_.empty()) throw std::invalid_argument("GpModel: needs at least one observation");
  if (static_cast<Index>(x_.size()) != y_.size()) throw std::invalid_argument("GpModel: x and y sizes differ");
  const Index n = y_.size();
  Mat k(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = kernel(x_[i], x_[j]);
    k(i, i) += hyper_.noise_var;
  }
  factor_ = SpdFactor(k);
  alpha_ = factor_.solve(y_);
}

double GpModel::kernel(const Vec& a, const Vec& b) const {
  return matern52((a - b).norm(), hyper_.lengthscale, hyper_.signal_var);
}

Posterior GpModel::predict(const Vec& x) const {
  Vec k(y_.size());
  for (Index i = 0; i < k.size(); ++i) k[i] = kernel(x, x_[i]);
  Posterior out;
  out.mean = k.dot(alpha_);
  const double var = hyper_.signal_var - factor_.half_solve(k).squaredNorm();
  out.variance = var < 0.0 ? 0.0 : var;
  return out;
}

double GpModel::log_marginal_likelihood() const {
  const double n = static_cast<double>(y_.size());
  return -0.5 * y_.dot(alpha_) - 0.5 * factor_.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

GpModel gp_fit(const std::vector<Vec>& x, const Vec& y, const Box& box) {
  if (x.empty()) throw std::invalid_argument("gp_fit: needs at least one observation");
  const double mean_sq = y.squaredNorm() / static_cast<double>(y.size());
  const double signal = std::max(mean_sq, 1e-12);
  const double centered = (y.array() - y.mean()).square().mean();
  const double var_y = std::max({centered, 1e-6 * signal, 1e-12});
  const double diag = box.diagonal();

  constexpr int kLengths = 24;
  bool have = false;
  double best_lml = -std::numeric_limits<double>::infinity();
  GpHyper best;
  for (int a = 0; a < kLengths; ++a) {
    const double ell = diag * std::pow(10.0, -2.0 + 3.0 * a / (kLengths - 1));
    for (int b = -6; b <= -2; ++b) {
      GpHyper h{ell, signal, std::pow(10.0, b) * var_y};
      try {
        const double lml = GpModel(x, y, h).log_marginal_likelihood();
        if (std::isfinite(lml) && (!have || lml > best_lml)) {
          have = true;
          best_lml = lml;
          best = h;
        }
      } catch (const NumericalError&) {
      }
    }
  }
  if (!have) throw NumericalError("gp_fit: no grid point gave a positive-definite Gram matrix");
  return GpModel(x, y, best);
}

double ei(double mu, double sigma, double best) {
  const double gap = best - mu;
  if (!(sigma > 0.0)) return std::max(0.0, gap);
  const double z = gap / sigma;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return gap * cdf + sigma * pdf;
}

double ucb(double mu, double sigma, double beta) { return mu - std::sqrt(beta) * sigma; }

double ucb_beta(int t, double delta) {
  const double pi2 = std::numbers::pi * std::numbers::pi;
  return 2.0 * std::log(static_cast<double>(t) * t * 2.0 * pi2 / (3.0 * delta));
}

namespace {

RunRecord start_record(const std::string& method, const Problem& problem, std::uint64_t seed) {
  problem.validate();
  RunRecord rec;
  rec.method = method;
  rec.problem = problem.name;
  rec.seed = seed;
  rec.dim = problem.dim();
  return rec;
}

void finish_record(RunRecord& rec, const Oracle& oracle, std::chrono::steady_clock::time_point start) {
  rec.expensive_calls = oracle.expensive_calls();
  rec.pde_calls = oracle.pde_calls();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int init_count(int requested, const Problem& problem, int budget) {
  return std::min(requested < 0 ? default_init_points(problem.dim()) : requested, budget);
}

enum class GpAcquisition { ei, ucb };

RunRecord gp_run(const Problem& problem, const GpBoConfig& cfg, GpAcquisition acq) {
  if (cfg.budget < 1) throw std::invalid_argument("GpBoConfig: budget must be at least 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw std::invalid_argument("GpBoConfig: delta must lie in (0, 1)");
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec = start_record(acq == GpAcquisition::ei ? "gp_ei" : "gp_ucb", problem, cfg.seed);
  rec.config = {{"budget", std::to_string(cfg.budget)},
                {"init_points", std::to_string(cfg.init_points)},
                {"candidates", std::to_string(cfg.candidates.uniform)},
                {"delta", std::to_string(cfg.delta)}};
  Oracle oracle(problem, cfg.seed);
  RunTracker tracker(oracle, rec);
  const int k = init_count(cfg.init_points, problem, cfg.budget);
  const auto init = initial_points(problem, k, cfg.seed);
  Rng rng = stream_rng(cfg.seed, Stream::candidates);

  std::vector<Vec> xs;
  std::vector<double> ys;
  for (int t = 1; t <= cfg.budget; ++t) {
    Vec x;
    if (t <= k) {
      x = init[static_cast<std::size_t>(t - 1)];
    } else {
      const GpModel gp = gp_fit(xs, Eigen::Map<const Vec>(ys.data(), static_cast<Index>(ys.size())), problem.domain);
      const auto cands = candidate_set(problem.domain, tracker.incumbent(), cfg.candidates, rng);
      const double beta = ucb_beta(t, cfg.delta);
      std::size_t best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const Posterior p = gp.predict(cands[c]);
        const double sd = std::sqrt(p.variance);
        // both scores are minimized
        const double score = acq == GpAcquisition::ei ? -ei(p.mean, sd, tracker.best_y()) : ucb(p.mean, sd, beta);
        if (score < best_score) {
          best_score = score;
          best = c;
        }
      }
      x = cands[best];
    }
    ys.push_back(tracker.observe(x));
    xs.push_back(x);
  }
  finish_record(rec, oracle, start);
  return rec;
}

}  // namespace

RunRecord gp_ei_run(const Problem& problem, const GpBoConfig& cfg) { return gp_run(problem, cfg, GpAcquisition::ei); }

RunRecord gp_ucb_run(const Problem& problem, const GpBoConfig& cfg) { return gp_run(problem, cfg, GpAcquisition::ucb); }

RunRecord neural_greedy_run(const Problem& problem, const PinnBoConfig& cfg, double perturb_fraction) {
  cfg.validate();
  if (!(perturb_fraction >= 0.0)) throw std::invalid_argument("neural_greedy_run: negative perturbation");
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec = start_record("neural_greedy", problem, cfg.seed);
  rec.config = cfg.snapshot();
  rec.config.erase("n_r");
  rec.config["perturb_fraction"] = std::to_string(perturb_fraction);

  Oracle oracle(problem, cfg.seed);
  RunTracker tracker(oracle, rec);
  SurrogateParams params = init_params(surrogate_for(problem, cfg.surrogate, cfg.seed));
  const int k = init_count(cfg.init_points, problem, cfg.budget);
  const auto init = initial_points(problem, k, cfg.seed);
  Rng cand_rng = stream_rng(cfg.seed, Stream::candidates);
  Rng perturb_rng = stream_rng(cfg.seed, Stream::method);
  TrainerOptions opt = cfg.opt;
  opt.epochs = cfg.epochs_per_retrain;

  std::vector<Observation> data;
  for (int t = 1; t <= cfg.budget; ++t) {
    const Vec x = t <= k ? init[static_cast<std::size_t>(t - 1)]
                         : propose(params, candidate_set(problem.domain, tracker.incumbent(), cfg.candidates, cand_rng)).x;
    data.push_back(Observation{x, tracker.observe(x)});

    if (t % cfg.retrain_every == 0 && t < cfg.budget) {
      double lo = data.front().value;
      double hi = lo;
      double scale = 0.0;
      for (const auto& o : data) {
        lo = std::min(lo, o.value);
        hi = std::max(hi, o.value);
        scale = std::max(scale, std::abs(o.value));
      }
      if (!cfg.scale_targets || scale < 1e-12) scale = 1.0;
      const double spread = perturb_fraction * (hi - lo);
      ObservationStore store(problem.domain);
      for (const auto& o : data) store.add_expensive(o.x, (o.value + spread * normal_draw(perturb_rng)) / scale);
      if (cfg.step_factor > 0.0) {
        Mat j(static_cast<Index>(data.size()), params.size());
        for (std::size_t i = 0; i < data.size(); ++i) j.row(static_cast<Index>(i)) = param_gradient(params, data[i].x).transpose();
        opt.lr = curvature_step(j, 1.0, cfg.step_factor, cfg.opt.lr);
      }
      params = train(params, store, nullptr, 1.0, opt).params;
    }
  }
  finish_record(rec, oracle, start);
  return rec;
}

RunRecord random_search_run(const Problem& problem, int budget, std::uint64_t seed, int init_points) {
  if (budget < 1) throw std::invalid_argument("random_search_run: budget must be at least 1");
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec = start_record("random_search", problem, seed);
  rec.config = {{"budget", std::to_string(budget)}, {"init_points", std::to_string(init_points)}};
  Oracle oracle(problem, seed);
  RunTracker tracker(oracle, rec);
  const int k = init_count(init_points, problem, budget);
  const auto init = initial_points(problem, k, seed);
  Rng rng = stream_rng(seed, Stream::candidates);
  for (int t = 1; t <= budget; ++t) {
    tracker.observe(t <= k ? init[static_cast<std::size_t>(t - 1)] : problem.domain.sample_uniform(rng));
  }
  finish_record(rec, oracle, start);
  return rec;
}

}  // namespace pinnbo
