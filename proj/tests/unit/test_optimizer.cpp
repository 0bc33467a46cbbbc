#include "pinnbo/baselines.hpp"
#include "pinnbo/benchmarks.hpp"
#include "pinnbo/optimizer.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace pinnbo;

namespace {

// f = |x|^2 with the Euler relation x . grad f - 2 f = 0.
Problem euler_bowl(double noise) {
  Problem p;
  p.name = "bowl";
  p.domain = Box::cube(2, -1.0, 1.0);
  p.op = linear_operator(
      "euler_relation", 2, {MultiIndex{0, 0}, MultiIndex{1, 0}, MultiIndex{0, 1}},
      [](const Vec& x) {
        Vec c(3);
        c << -2.0, x[0], x[1];
        return c;
      },
      [](const Vec&) { return 0.0; });
  p.objective = [](const Vec& x) { return x.squaredNorm(); };
  p.noise_std = noise;
  p.pde_noise_std = noise;
  p.f_star = 0.0;
  p.x_star = Vec::Zero(2);
  return p;
}

PinnBoConfig small_config(std::uint64_t seed) {
  PinnBoConfig cfg;
  cfg.budget = 25;
  cfg.n_r = 12;
  cfg.candidates.uniform = 128;
  cfg.surrogate.width = 16;
  cfg.epochs_per_retrain = 10;
  cfg.seed = seed;
  return cfg;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return 0.5 * (v[(n - 1) / 2] + v[n / 2]);
}

}  // namespace

TEST(Propose, ZeroNetworkPicksFirst) {
  SurrogateConfig c;
  c.input_dim = 2;
  c.width = 4;
  const SurrogateParams zero(c, Vec::Zero(c.param_count()));
  Rng rng(1);
  const Box box = Box::cube(2, 0, 1);
  std::vector<Vec> cands;
  for (int k = 0; k < 10; ++k) cands.push_back(box.sample_uniform(rng));
  EXPECT_EQ(propose(zero, cands).index, 0u);
  EXPECT_THROW(propose(zero, {}), std::invalid_argument);
}

TEST(Propose, MatchesLinearScan) {
  const Box box = Box::cube(3, -2.0, 2.0);
  Rng rng(2);
  for (std::uint64_t s = 0; s < 10; ++s) {
    SurrogateConfig c;
    c.input_dim = 3;
    c.width = 8;
    c.seed = s;
    c.input_box = box;
    const SurrogateParams p = init_params(c);
    std::vector<Vec> cands;
    for (int k = 0; k < 256; ++k) cands.push_back(box.sample_uniform(rng));
    std::size_t best = 0;
    for (std::size_t k = 1; k < cands.size(); ++k)
      if (forward(p, cands[k]) < forward(p, cands[best])) best = k;
    const Proposal got = propose(p, cands);
    EXPECT_EQ(got.index, best);
    EXPECT_EQ(got.x, cands[best]);
  }
}

TEST(Propose, StrictlyLowerPointWins) {
  SurrogateConfig c;
  c.input_dim = 1;
  c.width = 1;
  c.depth = 2;
  c.input_box = Box::cube(1, 0.0, 1.0);
  SurrogateParams p(c, Vec::Ones(c.param_count()));
  // h is increasing in x, so the smallest candidate wins wherever it sits
  const std::vector<Vec> cands{Vec::Constant(1, 0.7), Vec::Constant(1, 0.2), Vec::Constant(1, 0.9)};
  EXPECT_EQ(propose(p, cands).index, 1u);
}

TEST(Candidates, UniformThenLocal) {
  const Box box = Box::cube(2, 0.0, 10.0);
  CandidateOptions opt;
  opt.uniform = 50;
  opt.local = 7;
  opt.local_sigma = 0.01;
  Rng rng(3);
  const Vec center = Vec::Constant(2, 5.0);
  const auto c = candidate_set(box, center, opt, rng);
  ASSERT_EQ(c.size(), 57u);
  for (std::size_t k = 50; k < 57; ++k) EXPECT_LT((c[k] - center).norm(), 1.0);
  for (const auto& x : c) EXPECT_TRUE(box.contains(x));
  EXPECT_EQ(candidate_set(box, Vec(), opt, rng).size(), 50u);
}

TEST(Collocation, CountsSeedsAndLaplaceValues) {
  ProblemOptions o;
  o.heat_n = 33;
  const Problem heat = make_problem("heat1", o);
  Oracle a(heat, 4);
  EXPECT_TRUE(generate_collocation(heat, 0, 4, a).empty());
  const auto pts = generate_collocation(heat, 40, 4, a);
  ASSERT_EQ(pts.size(), 40u);
  EXPECT_EQ(a.pde_calls(), 40);
  for (const auto& z : pts) EXPECT_LE(std::abs(z.value), 5.0 * heat.pde_noise_std);
  Oracle b(heat, 4);
  const auto again = generate_collocation(heat, 40, 4, b);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    EXPECT_EQ(pts[k].x, again[k].x);
    EXPECT_EQ(pts[k].value, again[k].value);
  }
  EXPECT_THROW(generate_collocation(heat, -1, 4, b), std::invalid_argument);
}

TEST(Collocation, AvoidsSingularities) {
  ProblemOptions o;
  o.beam_n = 65;
  const Problem beam = make_problem("beam", o);
  Oracle oracle(beam, 5);
  for (const auto& z : generate_collocation(beam, 200, 5, oracle)) EXPECT_FALSE(beam.op.is_singular(z.x));

  Problem bad = euler_bowl(0.0);
  bad.op.singular = [](const Vec&) { return true; };
  Oracle o2(bad, 1);
  EXPECT_THROW(generate_collocation(bad, 3, 1, o2), NumericalError);
}

TEST(SuggestNr, Examples) {
  KernelBlocks b;
  b.uu = Mat::Zero(3, 3);
  b.lambda1 = 1.0;
  EXPECT_EQ(suggest_Nr(b, 2.0, 4.0), 1);

  Rng rng(6);
  Mat g(4, 4);
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 4; ++j) g(i, j) = normal_draw(rng);
  b.uu = g * g.transpose();
  b.lambda1 = 0.5;
  Eigen::SelfAdjointEigenSolver<Mat> eig(b.uu);
  const double rho = eig.eigenvalues().minCoeff();
  EXPECT_NEAR(min_eigenvalue(b.uu), rho, 1e-8);
  // a small L keeps the value away from the lower clamp; the cap is 10 t = 40
  const double l = 0.8;
  const double raw = 3.0 * (1.0 + rho / 0.5) / (l * l);
  EXPECT_EQ(suggest_Nr(b, l, 3.0), std::min(40, static_cast<int>(std::ceil(raw))));
  EXPECT_EQ(suggest_Nr(b, 1e-3, 3.0), 40);
  EXPECT_THROW(suggest_Nr(b, 0.0, 1.0), std::invalid_argument);

  b.uu = Mat::Identity(6, 6);
  b.lambda1 = 1.0;
  // pre-clamp values 2 (1 + 1) / 1 = 4 and 8: doubling c_r doubles it
  EXPECT_EQ(suggest_Nr(b, 1.0, 2.0), 4);
  EXPECT_EQ(suggest_Nr(b, 1.0, 4.0), 8);
}

TEST(PinnBoRun, SingleStep) {
  PinnBoConfig cfg = small_config(1);
  cfg.budget = 1;
  const RunRecord r = pinn_bo_run(euler_bowl(0.1), cfg);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.expensive_calls, 1);
  EXPECT_EQ(r.rows[0].best_y, r.rows[0].y);
}

TEST(PinnBoRun, AccountingAndRunningMinimum) {
  const PinnBoConfig cfg = small_config(2);
  const RunRecord r = pinn_bo_run(euler_bowl(0.05), cfg);
  ASSERT_EQ(r.rows.size(), 25u);
  EXPECT_EQ(r.expensive_calls, 25);
  EXPECT_EQ(r.pde_calls, 12);
  ASSERT_TRUE(r.bank.has_value());
  EXPECT_EQ(r.bank->t(), 25);
  EXPECT_EQ(r.bank->n_r(), 12);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    EXPECT_EQ(r.rows[k].t, static_cast<int>(k) + 1);
    best = std::min(best, r.rows[k].y);
    EXPECT_EQ(r.rows[k].best_y, best);
    EXPECT_GE(r.rows[k].regret, 0.0);
  }
  EXPECT_EQ(r.diagnostics.nu.size(), 25u);
}

TEST(PinnBoRun, NuUsesOnlyEarlierRows) {
  const PinnBoConfig cfg = small_config(3);
  const RunRecord r = pinn_bo_run(euler_bowl(0.05), cfg);
  const AnalysisConfig& an = cfg.analysis;
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const FeatureBank before = r.bank->prefix(static_cast<Index>(k));
    const double g = info_gain(gram_blocks(before, an.lambda1, an.lambda2));
    const double i = interaction_information(before, an.lambda1, an.lambda2);
    const double expect = an.r_tilde() * std::sqrt(std::max(0.0, 2 * g - 2 * i) + std::log(1.0 / an.delta));
    EXPECT_NEAR(r.rows[k].nu, std::max(expect, an.nu_min), 1e-10);
    EXPECT_NEAR(r.rows[k].gamma, g, 1e-12);
    EXPECT_NEAR(r.rows[k].interaction, i, 1e-12);
    if (k > 0) EXPECT_GE(r.rows[k].gamma, r.rows[k - 1].gamma - 1e-12);
    EXPECT_GE(r.rows[k].interaction, -1e-10);
  }
}

TEST(PinnBoRun, Deterministic) {
  const PinnBoConfig cfg = small_config(4);
  const RunRecord a = pinn_bo_run(euler_bowl(0.05), cfg);
  const RunRecord b = pinn_bo_run(euler_bowl(0.05), cfg);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].x, b.rows[k].x);
    EXPECT_EQ(a.rows[k].y, b.rows[k].y);
    EXPECT_EQ(a.rows[k].nu, b.rows[k].nu);
  }
  EXPECT_EQ(a.bank->phi(), b.bank->phi());
  EXPECT_EQ(a.config, b.config);
}

TEST(PinnBoRun, SharesInitialPointsWithBaselines) {
  const Problem p = euler_bowl(0.05);
  const PinnBoConfig cfg = small_config(5);
  const RunRecord a = pinn_bo_run(p, cfg);
  const RunRecord b = random_search_run(p, cfg.budget, cfg.seed);
  const auto init = initial_points(p, default_init_points(2), cfg.seed);
  for (std::size_t k = 0; k < init.size(); ++k) {
    EXPECT_EQ(a.rows[k].x, init[k]);
    EXPECT_EQ(b.rows[k].x, init[k]);
  }
}

TEST(PinnBoRun, EulerBowlNotWorseThanRandomSearch) {
  std::vector<double> pinn;
  std::vector<double> rs;
  const Problem p = euler_bowl(0.01);
  for (std::uint64_t s = 0; s < 10; ++s) {
    PinnBoConfig cfg;
    cfg.budget = 60;
    cfg.seed = s;
    pinn.push_back(pinn_bo_run(p, cfg).rows.back().best_y);
    rs.push_back(random_search_run(p, 60, s).rows.back().best_y);
  }
  EXPECT_LE(median(pinn), median(rs));
}

TEST(PinnBoConfig, Validation) {
  PinnBoConfig cfg;
  cfg.budget = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PinnBoConfig{};
  cfg.n_r = -1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PinnBoConfig{};
  cfg.candidates.uniform = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = PinnBoConfig{};
  cfg.step_factor = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_NO_THROW(PinnBoConfig{}.validate());
}

TEST(CurvatureStep, ScalesWithTopEigenvalue) {
  Mat j = Mat::Zero(2, 3);
  j(0, 0) = 2.0;
  j(1, 1) = 1.0;
  // J J^T = diag(4, 1)
  EXPECT_NEAR(curvature_step(j, 2.0, 0.5, 1e-3), 0.5 / (4.0 * 4.0), 1e-15);
  EXPECT_EQ(curvature_step(Mat(0, 3), 1.0, 0.5, 1e-3), 1e-3);
  EXPECT_EQ(curvature_step(Mat::Zero(2, 3), 1.0, 0.5, 1e-3), 1e-3);
}
