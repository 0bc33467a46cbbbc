#pragma once

#include "pinnbo/diff_operator.hpp"
#include "pinnbo/problem.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace pinnbo {

// ---------------------------------------------------------------------------
// Synthetic objectives

struct SyntheticFunction {
  std::string name;
  int dim = 0;
  Box domain;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  Vec x_star;
  double f_star = 0.0;

  /// Value and first-order partials for apply_to_analytic; nullopt for
  /// anything of higher order.
  AnalyticDerivatives derivatives() const;
};

/// dropwave, styblinski_tang, rastrigin, michalewicz, cosine_mixture.
/// `dim` <= 0 picks the default dimension (2, 10, 20, 30, 50).
SyntheticFunction synthetic(const std::string& name, int dim = 0, int michalewicz_m = 10);
std::vector<std::string> synthetic_names();
int default_dimension(const std::string& name);

/// max - min of `samples` uniform draws over the box (seeded, cached per
/// name, dimension and sample count).
double estimate_range(const SyntheticFunction& fn, long samples = 1000000);

// ---------------------------------------------------------------------------
// Steady-state heat on [0, L]^2

/// Dirichlet data, each edge a function of its free coordinate.
struct HeatBoundary {
  std::function<double(double)> bottom;  // T(s, 0)
  std::function<double(double)> top;     // T(s, L)
  std::function<double(double)> left;    // T(0, s)
  std::function<double(double)> right;   // T(L, s)
};

HeatBoundary heat_boundary(int bc_set);

/// values(i, j) = T(i h, j h), i, j in [0, n).
struct GridField {
  int n = 0;
  double h = 0.0;
  Mat values;
  int bc_set = 0;

  double length() const { return h * (n - 1); }
  /// Bilinear interpolation; the point is clamped to the square.
  double at(double x, double y) const;
};

constexpr double kHeatLength = 6.283185307179586;

/// 5-point FDM for the Laplace equation, direct sparse solve.
GridField solve_laplace(const HeatBoundary& bc, int n, double length = kHeatLength);
GridField solve_heat(int bc_set, int n);

/// Max interior |discrete Laplacian| (unscaled 5-point sum, divided by h^2).
double laplace_residual_max(const GridField& field);

// ---------------------------------------------------------------------------
// Simply-supported beam on [0, 1]

/// (EI w'')'' = q with w = w'' = 0 at both ends, described by the compliance
/// 1/EI (smooth even where EI has poles) and the load q.
struct BeamSpec {
  std::function<double(double)> compliance;
  std::function<double(double)> load;

  static BeamSpec nonuniform();
  static BeamSpec uniform(double ei, double q);
};

struct BeamSolution {
  int n = 0;
  double h = 0.0;
  Vec w;
  Vec moment;
  Vec compliance;
  Vec load;

  /// Cubic Lagrange interpolation over the four nearest nodes.
  double at(double x) const;
};

/// Split form: M'' = q, M(0) = M(1) = 0, then w'' = M / EI, w(0) = w(1) = 0.
BeamSolution solve_beam(int n, const BeamSpec& spec = BeamSpec::nonuniform());

// Flat binary layout: header of dims and spacing as little-endian doubles,
// then row-major values. Text layout: "# rows cols h" then one row per line.
void write_binary(std::ostream& out, const GridField& field);
GridField read_grid_binary(std::istream& in);
void write_text(std::ostream& out, const GridField& field);
void write_binary(std::ostream& out, const BeamSolution& beam);
BeamSolution read_beam_binary(std::istream& in);
void write_text(std::ostream& out, const BeamSolution& beam);

// ---------------------------------------------------------------------------

struct ProblemOptions {
  int dim = 0;
  int heat_n = 129;
  int beam_n = 513;
  int michalewicz_m = 10;
  /// Objective noise variance as a fraction of the range.
  double noise_fraction = 0.01;
  /// PDE noise standard deviation; negative means "same as the objective".
  double pde_noise_std = -1.0;
  long range_samples = 1000000;
};

/// Synthetic names plus heat1, heat2, heat3 and beam.
Problem make_problem(const std::string& name, const ProblemOptions& options = {});
std::vector<std::string> problem_names();

}  // namespace pinnbo
