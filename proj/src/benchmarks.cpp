#include "pinnbo/benchmarks.hpp"

#include "pinnbo/beam_physics.hpp"

#include <Eigen/Sparse>

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <tuple>

namespace pinnbo {

namespace {

constexpr double kPi = std::numbers::pi;

struct Minimum1d {
  double x = 0.0;
  double f = 0.0;
};

// Dense scan followed by golden-section refinement around the best node.
Minimum1d minimize_1d(const std::function<double(double)>& f, double lo, double hi) {
  constexpr int kScan = 20001;
  const double step = (hi - lo) / (kScan - 1);
  int best = 0;
  double best_f = f(lo);
  for (int k = 1; k < kScan; ++k) {
    const double v = f(lo + k * step);
    if (v < best_f) {
      best_f = v;
      best = k;
    }
  }
  double a = std::max(lo, lo + (best - 1) * step);
  double b = std::min(hi, lo + (best + 1) * step);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  Minimum1d out{0.5 * (a + b), f(0.5 * (a + b))};
  if (best_f < out.f) out = {lo + best * step, best_f};
  return out;
}

double dropwave_value(const Vec& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  return -(1.0 + std::cos(12.0 * std::sqrt(r2))) / (0.5 * r2 + 2.0);
}

Vec dropwave_gradient(const Vec& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1];
  const double r = std::sqrt(r2);
  Vec g = Vec::Zero(2);
  if (r == 0.0) return g;
  const double den = 0.5 * r2 + 2.0;
  const double num = 1.0 + std::cos(12.0 * r);
  const double dfdr = (12.0 * std::sin(12.0 * r) * den + num * r) / (den * den);
  g[0] = dfdr * x[0] / r;
  g[1] = dfdr * x[1] / r;
  return g;
}

double michalewicz_term(double xi, int i, int m) {
  return -std::sin(xi) * std::pow(std::sin(i * xi * xi / kPi), 2 * m);
}

SyntheticFunction make_synthetic(const std::string& name, int d, int m) {
  SyntheticFunction fn;
  fn.name = name;
  fn.dim = d;
  if (name == "dropwave") {
    if (d != 2) throw std::invalid_argument("dropwave is two-dimensional");
    fn.domain = Box::cube(2, -5.12, 5.12);
    fn.value = dropwave_value;
    fn.gradient = dropwave_gradient;
    fn.x_star = Vec::Zero(2);
    fn.f_star = -1.0;
  } else if (name == "styblinski_tang") {
    fn.domain = Box::cube(d, -5.0, 5.0);
    fn.value = [](const Vec& x) {
      return 0.5 * (x.array().pow(4) - 16.0 * x.array().square() + 5.0 * x.array()).sum();
    };
    fn.gradient = [](const Vec& x) -> Vec {
      return (2.0 * x.array().cube() - 16.0 * x.array() + 2.5).matrix();
    };
    const auto best = minimize_1d([](double t) { return 0.5 * (t * t * t * t - 16.0 * t * t + 5.0 * t); }, -5.0, 5.0);
    fn.x_star = Vec::Constant(d, best.x);
    fn.f_star = d * best.f;
  } else if (name == "rastrigin") {
    fn.domain = Box::cube(d, -5.12, 5.12);
    fn.value = [d](const Vec& x) {
      return 10.0 * d + (x.array().square() - 10.0 * (2.0 * kPi * x.array()).cos()).sum();
    };
    fn.gradient = [](const Vec& x) -> Vec {
      return (2.0 * x.array() + 20.0 * kPi * (2.0 * kPi * x.array()).sin()).matrix();
    };
    fn.x_star = Vec::Zero(d);
    fn.f_star = 0.0;
  } else if (name == "michalewicz") {
    fn.domain = Box::cube(d, 0.0, kPi);
    fn.value = [m](const Vec& x) {
      double acc = 0.0;
      for (Index i = 0; i < x.size(); ++i) acc += michalewicz_term(x[i], static_cast<int>(i) + 1, m);
      return acc;
    };
    fn.gradient = [m](const Vec& x) {
      Vec g(x.size());
      for (Index k = 0; k < x.size(); ++k) {
        const int i = static_cast<int>(k) + 1;
        const double u = i * x[k] * x[k] / kPi;
        const double su = std::sin(u);
        g[k] = -(std::cos(x[k]) * std::pow(su, 2 * m) +
                 std::sin(x[k]) * 2.0 * m * std::pow(su, 2 * m - 1) * std::cos(u) * 2.0 * i * x[k] / kPi);
      }
      return g;
    };
    fn.x_star.resize(d);
    fn.f_star = 0.0;
    for (int k = 0; k < d; ++k) {
      const auto best = minimize_1d([k, m](double t) { return michalewicz_term(t, k + 1, m); }, 0.0, kPi);
      fn.x_star[k] = best.x;
      fn.f_star += best.f;
    }
  } else if (name == "cosine_mixture") {
    fn.domain = Box::cube(d, -1.0, 1.0);
    fn.value = [](const Vec& x) { return 0.1 * (5.0 * kPi * x.array()).cos().sum() + x.squaredNorm(); };
    fn.gradient = [](const Vec& x) -> Vec {
      return (-0.5 * kPi * (5.0 * kPi * x.array()).sin() + 2.0 * x.array()).matrix();
    };
    const auto best = minimize_1d([](double t) { return 0.1 * std::cos(5.0 * kPi * t) + t * t; }, -1.0, 1.0);
    fn.x_star = Vec::Constant(d, best.x);
    fn.f_star = d * best.f;
  } else {
    throw std::invalid_argument("unknown synthetic function: " + name);
  }
  return fn;
}

}  // namespace

AnalyticDerivatives SyntheticFunction::derivatives() const {
  auto value_fn = value;
  auto grad_fn = gradient;
  return [value_fn, grad_fn](const Vec& x, const MultiIndex& alpha) -> std::optional<double> {
    const int order = total_order(alpha);
    if (order == 0) return value_fn(x);
    if (order != 1) return std::nullopt;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] == 1) return grad_fn(x)[static_cast<Index>(i)];
    }
    return std::nullopt;
  };
}

std::vector<std::string> synthetic_names() {
  return {"dropwave", "styblinski_tang", "rastrigin", "michalewicz", "cosine_mixture"};
}

int default_dimension(const std::string& name) {
  if (name == "dropwave") return 2;
  if (name == "styblinski_tang") return 10;
  if (name == "rastrigin") return 20;
  if (name == "michalewicz") return 30;
  if (name == "cosine_mixture") return 50;
  if (name == "heat1" || name == "heat2" || name == "heat3") return 2;
  if (name == "beam") return 1;
  throw std::invalid_argument("unknown problem: " + name);
}

SyntheticFunction synthetic(const std::string& name, int dim, int michalewicz_m) {
  const int d = dim > 0 ? dim : default_dimension(name);
  return make_synthetic(name, d, michalewicz_m);
}

double estimate_range(const SyntheticFunction& fn, long samples) {
  static std::mutex mutex;
  static std::map<std::tuple<std::string, int, long>, double> cache;
  const auto key = std::make_tuple(fn.name, fn.dim, samples);
  {
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  Rng rng = make_rng(0, 0xA11CE);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (long k = 0; k < samples; ++k) {
    const double v = fn.value(fn.domain.sample_uniform(rng));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double range = hi - lo;
  std::lock_guard<std::mutex> lock(mutex);
  cache[key] = range;
  return range;
}

// ---------------------------------------------------------------------------

HeatBoundary heat_boundary(int bc_set) {
  using std::cos;
  using std::exp;
  using std::sin;
  using std::sqrt;
  HeatBoundary bc;
  switch (bc_set) {
    case 1:
      bc.bottom = [](double s) { return 5.0 * sin(s) + sqrt(1.0 + s); };
      bc.top = [](double s) { return s * sin(3.0 * cos(s) + 2.0 * exp(s) * sin(s)); };
      bc.left = [](double s) { return 10.0 * cos(s) + s * exp(sqrt(s * s + sin(s))); };
      bc.right = [](double s) { return 3.0 * sqrt(exp(s * exp(-s))) * sin(s) + cos(3.0 * s) * cos(3.0 * s); };
      break;
    case 2:
      bc.bottom = [](double s) { return sin(s) * cos(2.0 * s) + s * s * sqrt(3.0 * s) + exp(sin(s)); };
      bc.top = [](double s) { return exp(sin(s)) * sqrt(3.0 * s) + s * s * cos(s) * sin(s) * sin(s) + exp(cos(s)); };
      bc.left = [](double s) { return sqrt(2.0 * s) * sin(s) + s * s * s * cos(2.0 * s) + exp(cos(s)); };
      bc.right = [](double s) { return sin(s) * cos(2.0 * s) + s * s * s * sqrt(2.0 * s) + exp(sin(s)); };
      break;
    case 3:
      bc.bottom = [](double s) { return (sin(s) + cos(2.0 * s)) * sqrt(3.0 * s) + s * s + exp(sin(s)); };
      bc.top = [](double s) {
        return (exp(sin(s)) + sqrt(3.0 * s)) * cos(s) + (sin(s) * sin(s) + s * s) * exp(cos(s));
      };
      bc.left = [](double s) { return (sqrt(2.0 * s) + sin(s)) * (cos(2.0 * s) + s * s * s) + exp(cos(s)); };
      bc.right = [](double s) { return (sin(s) + cos(2.0 * s)) * (sqrt(2.0 * s) + s * s * s) + exp(sin(s)); };
      break;
    default:
      throw std::invalid_argument("heat boundary set must be 1, 2 or 3");
  }
  return bc;
}

double GridField::at(double x, double y) const {
  const double len = length();
  x = std::clamp(x, 0.0, len);
  y = std::clamp(y, 0.0, len);
  const int i = std::min(static_cast<int>(x / h), n - 2);
  const int j = std::min(static_cast<int>(y / h), n - 2);
  const double tx = x / h - i;
  const double ty = y / h - j;
  return (1.0 - tx) * (1.0 - ty) * values(i, j) + tx * (1.0 - ty) * values(i + 1, j) +
         (1.0 - tx) * ty * values(i, j + 1) + tx * ty * values(i + 1, j + 1);
}

GridField solve_laplace(const HeatBoundary& bc, int n, double length) {
  if (n < 17) throw std::invalid_argument("solve_laplace: grid size must be at least 17");
  GridField field;
  field.n = n;
  field.h = length / (n - 1);
  field.values = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    field.values(i, 0) = bc.bottom(i * field.h);
    field.values(i, n - 1) = bc.top(i * field.h);
  }
  for (int j = 1; j < n - 1; ++j) {
    field.values(0, j) = bc.left(j * field.h);
    field.values(n - 1, j) = bc.right(j * field.h);
  }

  const int m = n - 2;
  auto id = [m](int i, int j) { return (i - 1) + (j - 1) * m; };
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * m * m));
  Vec b = Vec::Zero(m * m);
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      const int row = id(i, j);
      triplets.emplace_back(row, row, 4.0);
      const int ni[4] = {i - 1, i + 1, i, i};
      const int nj[4] = {j, j, j - 1, j + 1};
      for (int k = 0; k < 4; ++k) {
        if (ni[k] == 0 || ni[k] == n - 1 || nj[k] == 0 || nj[k] == n - 1) {
          b[row] += field.values(ni[k], nj[k]);
        } else {
          triplets.emplace_back(row, id(ni[k], nj[k]), -1.0);
        }
      }
    }
  }
  Eigen::SparseMatrix<double> a(m * m, m * m);
  a.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("solve_laplace: factorization failed");
  const Vec u = solver.solve(b);
  const double res = (a * u - b).norm();
  if (!u.allFinite() || (res > 1e-10 * b.norm() && res > 1e-12)) {
    throw NumericalError("solve_laplace: linear solve did not converge");
  }
  for (int j = 1; j <= m; ++j)
    for (int i = 1; i <= m; ++i) field.values(i, j) = u[id(i, j)];
  return field;
}

GridField solve_heat(int bc_set, int n) {
  GridField field = solve_laplace(heat_boundary(bc_set), n);
  field.bc_set = bc_set;
  return field;
}

double laplace_residual_max(const GridField& f) {
  double worst = 0.0;
  for (int j = 1; j < f.n - 1; ++j) {
    for (int i = 1; i < f.n - 1; ++i) {
      const double lap = f.values(i - 1, j) + f.values(i + 1, j) + f.values(i, j - 1) + f.values(i, j + 1) -
                         4.0 * f.values(i, j);
      worst = std::max(worst, std::abs(lap) / (f.h * f.h));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------

BeamSpec BeamSpec::nonuniform() { return BeamSpec{beam::compliance, beam::load}; }

BeamSpec BeamSpec::uniform(double ei, double q) {
  if (!(ei > 0.0)) throw std::invalid_argument("BeamSpec::uniform: EI must be positive");
  return BeamSpec{[ei](double) { return 1.0 / ei; }, [q](double) { return q; }};
}

namespace {

// u'' = rhs on a uniform grid with u = 0 at both ends (Thomas algorithm).
Vec solve_dirichlet_1d(const Vec& rhs, double h) {
  const Index n = rhs.size();
  Vec u = Vec::Zero(n);
  const Index m = n - 2;
  Vec c(m);
  Vec d(m);
  // rows: u_{k-1} - 2 u_k + u_{k+1} = h^2 rhs_k
  for (Index k = 0; k < m; ++k) {
    const double bk = -2.0 - (k > 0 ? c[k - 1] : 0.0);
    c[k] = 1.0 / bk;
    d[k] = (h * h * rhs[k + 1] - (k > 0 ? d[k - 1] : 0.0)) / bk;
  }
  for (Index k = m - 1; k >= 0; --k) u[k + 1] = d[k] - (k + 1 < m ? c[k] * u[k + 2] : 0.0);
  return u;
}

}  // namespace

double BeamSolution::at(double x) const {
  x = std::clamp(x, 0.0, 1.0);
  const int k = static_cast<int>(x / h);
  const int base = std::clamp(k - 1, 0, n - 4);
  double acc = 0.0;
  for (int a = 0; a < 4; ++a) {
    double basis = 1.0;
    const double xa = (base + a) * h;
    for (int b = 0; b < 4; ++b) {
      if (b != a) basis *= (x - (base + b) * h) / (xa - (base + b) * h);
    }
    acc += basis * w[base + a];
  }
  return acc;
}

BeamSolution solve_beam(int n, const BeamSpec& spec) {
  if (n < 33) throw std::invalid_argument("solve_beam: grid size must be at least 33");
  BeamSolution sol;
  sol.n = n;
  sol.h = 1.0 / (n - 1);
  sol.compliance.resize(n);
  sol.load.resize(n);
  for (int i = 0; i < n; ++i) {
    sol.compliance[i] = spec.compliance(i * sol.h);
    sol.load[i] = spec.load(i * sol.h);
  }
  sol.moment = solve_dirichlet_1d(sol.load, sol.h);
  sol.w = solve_dirichlet_1d(sol.moment.cwiseProduct(sol.compliance), sol.h);
  if (!sol.w.allFinite()) throw NumericalError("solve_beam: non-finite deflection");
  return sol;
}

// ---------------------------------------------------------------------------

namespace {

void put_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("binary read: truncated input");
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
  return std::bit_cast<double>(bits);
}

void write_matrix_binary(std::ostream& out, const Mat& m, double h) {
  put_le(out, static_cast<double>(m.rows()));
  put_le(out, static_cast<double>(m.cols()));
  put_le(out, h);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) put_le(out, m(i, j));
}

Mat read_matrix_binary(std::istream& in, double& h) {
  const double rows = get_le(in);
  const double cols = get_le(in);
  h = get_le(in);
  if (!(rows >= 1 && cols >= 1 && rows < 1e8 && cols < 1e8)) throw std::runtime_error("binary read: bad header");
  Mat m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = get_le(in);
  return m;
}

void write_matrix_text(std::ostream& out, const Mat& m, double h) {
  out << "# " << m.rows() << ' ' << m.cols() << ' ';
  out.precision(17);
  out << h << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

Mat beam_rows(const BeamSolution& beam) {
  Mat m(4, beam.n);
  m.row(0) = beam.w.transpose();
  m.row(1) = beam.moment.transpose();
  m.row(2) = beam.compliance.transpose();
  m.row(3) = beam.load.transpose();
  return m;
}

}  // namespace

void write_binary(std::ostream& out, const GridField& field) { write_matrix_binary(out, field.values, field.h); }

GridField read_grid_binary(std::istream& in) {
  GridField f;
  f.values = read_matrix_binary(in, f.h);
  if (f.values.rows() != f.values.cols()) throw std::runtime_error("read_grid_binary: grid is not square");
  f.n = static_cast<int>(f.values.rows());
  return f;
}

void write_text(std::ostream& out, const GridField& field) { write_matrix_text(out, field.values, field.h); }

void write_binary(std::ostream& out, const BeamSolution& beam) { write_matrix_binary(out, beam_rows(beam), beam.h); }

BeamSolution read_beam_binary(std::istream& in) {
  BeamSolution b;
  const Mat m = read_matrix_binary(in, b.h);
  if (m.rows() != 4) throw std::runtime_error("read_beam_binary: expected four rows");
  b.n = static_cast<int>(m.cols());
  b.w = m.row(0).transpose();
  b.moment = m.row(1).transpose();
  b.compliance = m.row(2).transpose();
  b.load = m.row(3).transpose();
  return b;
}

void write_text(std::ostream& out, const BeamSolution& beam) { write_matrix_text(out, beam_rows(beam), beam.h); }

// ---------------------------------------------------------------------------

namespace {

double resolve_pde_noise(const ProblemOptions& o, double noise_std) {
  return o.pde_noise_std < 0.0 ? noise_std : o.pde_noise_std;
}

}  // namespace

Problem make_problem(const std::string& name, const ProblemOptions& options) {
  Problem p;
  p.name = name;
  BuiltinOptions bopt;
  bopt.michalewicz_m = options.michalewicz_m;

  if (name == "heat1" || name == "heat2" || name == "heat3") {
    auto field = std::make_shared<const GridField>(solve_heat(name.back() - '0', options.heat_n));
    p.domain = Box::cube(2, 0.0, field->length());
    p.op = builtin("laplace2d", 2, bopt);
    p.objective = [field](const Vec& x) { return -field->at(x[0], x[1]); };
    Index i = 0;
    Index j = 0;
    const double tmax = field->values.maxCoeff(&i, &j);
    p.f_star = -tmax;
    p.x_star = Vec(2);
    (*p.x_star) << i * field->h, j * field->h;
    p.noise_std = std::sqrt(options.noise_fraction * (tmax - field->values.minCoeff()));
    p.report_sign = -1.0;
  } else if (name == "beam") {
    auto sol = std::make_shared<const BeamSolution>(solve_beam(options.beam_n));
    p.domain = Box::cube(1, 0.0, 1.0);
    p.op = builtin("euler_bernoulli", 1, bopt);
    p.objective = [sol](const Vec& x) { return sol->at(x[0]); };
    Index k = 0;
    p.f_star = sol->w.minCoeff(&k);
    p.x_star = Vec::Constant(1, k * sol->h);
    p.noise_std = std::sqrt(options.noise_fraction * (sol->w.maxCoeff() - sol->w.minCoeff()));
  } else {
    const SyntheticFunction fn = synthetic(name, options.dim, options.michalewicz_m);
    p.domain = fn.domain;
    p.op = builtin(name, fn.dim, bopt);
    p.objective = fn.value;
    p.f_star = fn.f_star;
    p.x_star = fn.x_star;
    p.noise_std = std::sqrt(options.noise_fraction * estimate_range(fn, options.range_samples));
  }
  p.pde_noise_std = resolve_pde_noise(options, p.noise_std);
  p.validate();
  return p;
}

std::vector<std::string> problem_names() {
  auto names = synthetic_names();
  for (const char* extra : {"heat1", "heat2", "heat3", "beam"}) names.emplace_back(extra);
  return names;
}

}  // namespace pinnbo
