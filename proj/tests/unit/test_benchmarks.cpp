#include "pinnbo/benchmarks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace pinnbo;

namespace {

constexpr double kPi = std::numbers::pi;

// Least-squares slope of log(error) against log(h).
double refinement_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const std::size_t n = h.size();
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(h[i]) / n;
    my += std::log(err[i]) / n;
  }
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(h[i]) - mx) * (std::log(err[i]) - my);
    sxx += (std::log(h[i]) - mx) * (std::log(h[i]) - mx);
  }
  return sxy / sxx;
}

ProblemOptions quick_options() {
  ProblemOptions o;
  o.range_samples = 20000;
  o.heat_n = 33;
  o.beam_n = 65;
  return o;
}

}  // namespace

TEST(Synthetic, KnownValues) {
  const SyntheticFunction dw = synthetic("dropwave");
  EXPECT_EQ(dw.dim, 2);
  EXPECT_DOUBLE_EQ(dw.value(Vec::Zero(2)), -1.0);
  EXPECT_EQ(dw.f_star, -1.0);

  const SyntheticFunction st = synthetic("styblinski_tang", 4);
  const Vec g = st.gradient(Vec::Zero(4));
  for (Index i = 0; i < 4; ++i) EXPECT_NEAR(g[i], 2.5, 1e-14);

  const SyntheticFunction cm = synthetic("cosine_mixture");
  EXPECT_EQ(cm.dim, 50);
  EXPECT_NEAR(cm.value(Vec::Zero(50)), 5.0, 1e-12);

  EXPECT_NEAR(synthetic("rastrigin", 3).value(Vec::Zero(3)), 0.0, 1e-12);
  EXPECT_EQ(default_dimension("styblinski_tang"), 10);
  EXPECT_EQ(default_dimension("rastrigin"), 20);
  EXPECT_EQ(default_dimension("michalewicz"), 30);
  EXPECT_THROW(synthetic("ackley"), std::invalid_argument);
}

TEST(Synthetic, DomainsAndOptima) {
  Rng rng(1);
  for (const auto& name : synthetic_names()) {
    const SyntheticFunction fn = synthetic(name, name == "dropwave" ? 0 : 3);
    EXPECT_NEAR(fn.value(fn.x_star), fn.f_star, 1e-9) << name;
    EXPECT_TRUE(fn.domain.contains(fn.x_star)) << name;
    for (int k = 0; k < 2000; ++k) EXPECT_GE(fn.value(fn.domain.sample_uniform(rng)), fn.f_star - 1e-9) << name;
  }
  EXPECT_EQ(synthetic("dropwave").domain.hi[0], 5.12);
  EXPECT_EQ(synthetic("styblinski_tang", 2).domain.lo[1], -5.0);
  EXPECT_NEAR(synthetic("michalewicz", 2).domain.hi[0], kPi, 1e-15);
  EXPECT_EQ(synthetic("cosine_mixture", 2).domain.lo[0], -1.0);
}

TEST(Synthetic, GradientMatchesFiniteDifferences) {
  Rng rng(2);
  for (const auto& name : synthetic_names()) {
    const SyntheticFunction fn = synthetic(name, name == "dropwave" ? 0 : 4);
    for (int k = 0; k < 50; ++k) {
      const Vec x = fn.domain.sample_uniform(rng);
      const Vec g = fn.gradient(x);
      for (int i = 0; i < fn.dim; ++i) {
        const double e = 1e-6;
        Vec a = x;
        Vec b = x;
        a[i] += e;
        b[i] -= e;
        const double fd = (fn.value(a) - fn.value(b)) / (2 * e);
        EXPECT_NEAR(g[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << name;
      }
    }
  }
}

TEST(Synthetic, SatisfiesOwnConstraint) {
  Rng rng(3);
  for (const auto& name : synthetic_names()) {
    const SyntheticFunction fn = synthetic(name);
    const DiffOperator op = builtin(name, fn.dim);
    const AnalyticDerivatives d = fn.derivatives();
    double worst = 0.0;
    int used = 0;
    while (used < 1000) {
      const Vec x = fn.domain.sample_uniform(rng);
      if (op.is_singular(x)) continue;
      ++used;
      worst = std::max(worst, std::abs(apply_to_analytic(op, d, x) - op.rhs(x)));
    }
    EXPECT_LE(worst, 1e-7) << name;
  }
}

TEST(Heat, ConstantBoundaryGivesConstantInterior) {
  HeatBoundary bc;
  bc.bottom = bc.top = bc.left = bc.right = [](double) { return 3.5; };
  const GridField f = solve_laplace(bc, 33);
  EXPECT_LE((f.values.array() - 3.5).abs().maxCoeff(), 1e-10);
}

TEST(Heat, HarmonicRefinementIsSecondOrder) {
  // x^2 - y^2 is reproduced exactly by the 5-point stencil, so the probe
  // uses e^{x/2} sin(y/2), harmonic with a nonzero fourth derivative.
  auto exact = [](double x, double y) { return std::exp(0.5 * x) * std::sin(0.5 * y); };
  HeatBoundary bc;
  bc.bottom = [&](double s) { return exact(s, 0.0); };
  bc.top = [&](double s) { return exact(s, kHeatLength); };
  bc.left = [&](double s) { return exact(0.0, s); };
  bc.right = [&](double s) { return exact(kHeatLength, s); };
  std::vector<double> hs;
  std::vector<double> errs;
  for (int n : {17, 33, 65}) {
    const GridField f = solve_laplace(bc, n);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) err = std::max(err, std::abs(f.values(i, j) - exact(i * f.h, j * f.h)));
    hs.push_back(f.h);
    errs.push_back(err);
  }
  const double slope = refinement_slope(hs, errs);
  EXPECT_GE(slope, 1.8);
  EXPECT_LE(slope, 2.2);

  HeatBoundary quad;
  quad.bottom = [](double s) { return s * s; };
  quad.top = [](double s) { return s * s - kHeatLength * kHeatLength; };
  quad.left = [](double s) { return -s * s; };
  quad.right = [](double s) { return kHeatLength * kHeatLength - s * s; };
  const GridField q = solve_laplace(quad, 17);
  for (int i = 0; i < 17; ++i)
    for (int j = 0; j < 17; ++j) EXPECT_NEAR(q.values(i, j), std::pow(i * q.h, 2) - std::pow(j * q.h, 2), 1e-9);
}

TEST(Heat, BoundaryRowsAndResidual) {
  const GridField f = solve_heat(1, 257);
  const HeatBoundary bc = heat_boundary(1);
  for (int k = 16; k < 256; k += 16) {  // corners belong to two edges
    EXPECT_EQ(f.values(k, 0), bc.bottom(k * f.h));
    EXPECT_EQ(f.values(0, k), bc.left(k * f.h));
  }
  EXPECT_LE(laplace_residual_max(f), 1e-8);
  EXPECT_THROW(heat_boundary(4), std::invalid_argument);
  for (int set : {2, 3}) EXPECT_LE(laplace_residual_max(solve_heat(set, 65)), 1e-8);
}

TEST(Beam, ZeroLoadGivesZeroDeflection) {
  const BeamSolution b = solve_beam(65, BeamSpec{[](double x) { return 1.0 + x; }, [](double) { return 0.0; }});
  EXPECT_LE(b.w.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Beam, UniformMidspan) {
  const BeamSolution b = solve_beam(257, BeamSpec::uniform(1.0, 1.0));
  EXPECT_NEAR(b.at(0.5), 5.0 / 384.0, 2e-4);
  EXPECT_NEAR(b.w[0], 0.0, 1e-14);
  EXPECT_NEAR(b.w[256], 0.0, 1e-14);
}

TEST(Beam, ManufacturedRefinementIsSecondOrder) {
  // w = sin(pi x) with EI = 1 + x/2, so q = (EI w'')''
  BeamSpec spec;
  spec.compliance = [](double x) { return 1.0 / (1.0 + 0.5 * x); };
  spec.load = [](double x) {
    return kPi * kPi * kPi * kPi * (1.0 + 0.5 * x) * std::sin(kPi * x) - kPi * kPi * kPi * std::cos(kPi * x);
  };
  std::vector<double> hs;
  std::vector<double> errs;
  for (int n : {33, 65, 129, 257}) {
    const BeamSolution b = solve_beam(n, spec);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(b.w[i] - std::sin(kPi * i * b.h)));
    hs.push_back(b.h);
    errs.push_back(err);
  }
  const double slope = refinement_slope(hs, errs);
  EXPECT_GE(slope, 1.8);
  EXPECT_LE(slope, 2.2);
}

TEST(Beam, NonuniformProblemIsFinite) {
  const BeamSolution b = solve_beam(129);
  EXPECT_TRUE(b.w.allFinite());
  EXPECT_NEAR(b.w[0], 0.0, 1e-14);
  EXPECT_NEAR(b.w[128], 0.0, 1e-14);
  EXPECT_THROW(solve_beam(16), std::invalid_argument);
}

TEST(Serialization, GridBinaryRoundTrip) {
  const GridField f = solve_heat(2, 17);
  std::stringstream ss;
  write_binary(ss, f);
  const GridField g = read_grid_binary(ss);
  EXPECT_EQ(g.n, f.n);
  EXPECT_EQ(g.h, f.h);
  EXPECT_EQ(g.values, f.values);

  std::stringstream txt;
  write_text(txt, f);
  std::string head;
  std::getline(txt, head);
  EXPECT_EQ(head.rfind("# 17 17", 0), 0u) << head;
}

TEST(Serialization, BeamBinaryRoundTrip) {
  const BeamSolution b = solve_beam(33);
  std::stringstream ss;
  write_binary(ss, b);
  const BeamSolution c = read_beam_binary(ss);
  EXPECT_EQ(c.n, b.n);
  EXPECT_EQ(c.h, b.h);
  EXPECT_EQ(c.w, b.w);
  EXPECT_EQ(c.load, b.load);
}

TEST(Problems, NamesAndFraming) {
  const auto names = problem_names();
  EXPECT_EQ(names.size(), 9u);
  const ProblemOptions o = quick_options();
  const Problem heat = make_problem("heat1", o);
  EXPECT_EQ(heat.report_sign, -1.0);
  EXPECT_NEAR(heat.objective(*heat.x_star), *heat.f_star, 1e-12);
  const Problem beam = make_problem("beam", o);
  EXPECT_EQ(beam.dim(), 1);
  EXPECT_EQ(beam.op.name, "euler_bernoulli");
  EXPECT_THROW(make_problem("nope", o), std::invalid_argument);
}

TEST(Problems, NoiseVarianceMatchesConfiguration) {
  ProblemOptions o = quick_options();
  o.dim = 3;
  const Problem p = make_problem("styblinski_tang", o);
  Oracle oracle(p, 7);
  const Vec x = Vec::Constant(3, 0.5);
  const double f = p.objective(x);
  const int n = 100000;
  double s = 0.0;
  double s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double e = oracle.query(x) - f;
    s += e;
    s2 += e * e;
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var, p.noise_std * p.noise_std, 0.05 * p.noise_std * p.noise_std);
  EXPECT_EQ(oracle.expensive_calls(), n);
  EXPECT_NEAR(p.noise_std * p.noise_std, 0.01 * estimate_range(synthetic("styblinski_tang", 3), o.range_samples), 1e-12);
}
