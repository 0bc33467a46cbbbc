#include "pinnbo/diff_operator.hpp"

#include "pinnbo/beam_physics.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace pinnbo {

namespace {
constexpr double kPi = std::numbers::pi;
}

void DiffOperator::validate() const {
  if (dim < 1) throw std::invalid_argument("DiffOperator: dim must be positive");
  if (slots.empty()) throw std::invalid_argument("DiffOperator: at least one slot is required");
  for (const auto& alpha : slots) {
    if (static_cast<int>(alpha.size()) != dim) throw std::invalid_argument("DiffOperator: slot dimension mismatch");
    if (total_order(alpha) > kMaxDerivativeOrder) throw std::invalid_argument("DiffOperator: slot order above 4");
  }
  if (!residual || !slot_gradient || !rhs) throw std::invalid_argument("DiffOperator: missing callable");
}

int DiffOperator::max_order() const {
  int out = 0;
  for (const auto& alpha : slots) out = std::max(out, total_order(alpha));
  return out;
}

DiffOperator linear_operator(std::string name, int dim, std::vector<MultiIndex> slots,
                             std::function<Vec(const Vec&)> coefficients, std::function<double(const Vec&)> rhs) {
  DiffOperator op;
  op.name = std::move(name);
  op.dim = dim;
  op.slots = std::move(slots);
  op.residual = [coefficients](const Vec& x, std::span<const double> v) {
    const Vec c = coefficients(x);
    double acc = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) acc += c[static_cast<Index>(k)] * v[k];
    return acc;
  };
  op.slot_gradient = [coefficients](const Vec& x, std::span<const double>) { return coefficients(x); };
  op.rhs = std::move(rhs);
  op.linear = true;
  op.validate();
  return op;
}

double michalewicz_coefficient(double xi, int i_one_based, int m) {
  const double u = i_one_based * xi * xi / kPi;
  const double bracket = std::cos(xi) / std::sin(xi) + 4.0 * m * i_one_based * xi * std::cos(u) / (kPi * std::sin(u));
  if (!std::isfinite(bracket)) return 0.0;
  return 1.0 / bracket;
}

namespace {

std::vector<MultiIndex> first_order_slots(int dim, bool with_value) {
  std::vector<MultiIndex> slots;
  if (with_value) slots.emplace_back(static_cast<std::size_t>(dim), 0);
  for (int i = 0; i < dim; ++i) slots.push_back(unit_index(dim, i));
  return slots;
}

int require_dim(const std::string& name, int dim) {
  if (dim < 1) throw std::invalid_argument("builtin(" + name + "): dimension must be given");
  return dim;
}

DiffOperator dropwave_operator() {
  // x1 df/dx2 - x2 df/dx1 = 0 (rotational symmetry)
  return linear_operator(
      "dropwave", 2, first_order_slots(2, false),
      [](const Vec& x) {
        Vec c(2);
        c << -x[1], x[0];
        return c;
      },
      [](const Vec&) { return 0.0; });
}

DiffOperator styblinski_tang_operator(int dim) {
  return linear_operator(
      "styblinski_tang", dim, first_order_slots(dim, false), [dim](const Vec&) { return Vec::Ones(dim); },
      [](const Vec& x) {
        return (2.0 * x.array().cube() - 16.0 * x.array() + 2.5).sum();
      });
}

DiffOperator rastrigin_operator(int dim) {
  // x^T grad f - f = sum_i [x_i^2 + 20 pi x_i sin(2 pi x_i) + 10 cos(2 pi x_i) - 10]
  return linear_operator(
      "rastrigin", dim, first_order_slots(dim, true),
      [dim](const Vec& x) {
        Vec c(dim + 1);
        c[0] = -1.0;
        c.tail(dim) = x;
        return c;
      },
      [](const Vec& x) {
        double acc = 0.0;
        for (Index i = 0; i < x.size(); ++i) {
          const double a = 2.0 * kPi * x[i];
          acc += x[i] * x[i] + 20.0 * kPi * x[i] * std::sin(a) + 10.0 * std::cos(a) - 10.0;
        }
        return acc;
      });
}

DiffOperator michalewicz_operator(int dim, int m) {
  // h^T grad f - f = 0
  DiffOperator op = linear_operator(
      "michalewicz", dim, first_order_slots(dim, true),
      [dim, m](const Vec& x) {
        Vec c(dim + 1);
        c[0] = -1.0;
        for (int i = 0; i < dim; ++i) c[i + 1] = michalewicz_coefficient(x[i], i + 1, m);
        return c;
      },
      [](const Vec&) { return 0.0; });
  op.singular = [dim, m](const Vec& x) {
    for (int i = 0; i < dim; ++i) {
      const double h = michalewicz_coefficient(x[i], i + 1, m);
      if (!std::isfinite(h) || std::abs(h) > 1e3) return true;
    }
    return false;
  };
  return op;
}

DiffOperator cosine_mixture_operator(int dim) {
  // sum_i (df/dx_i - 2 x_i + 0.5 pi sin(5 pi x_i))^2 = 0
  DiffOperator op;
  op.name = "cosine_mixture";
  op.dim = dim;
  op.slots = first_order_slots(dim, false);
  auto inner = [](const Vec& x, std::span<const double> v, Index i) {
    return v[static_cast<std::size_t>(i)] - 2.0 * x[i] + 0.5 * kPi * std::sin(5.0 * kPi * x[i]);
  };
  op.residual = [inner](const Vec& x, std::span<const double> v) {
    double acc = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
      const double t = inner(x, v, i);
      acc += t * t;
    }
    return acc;
  };
  op.slot_gradient = [inner](const Vec& x, std::span<const double> v) {
    Vec g(x.size());
    for (Index i = 0; i < x.size(); ++i) g[i] = 2.0 * inner(x, v, i);
    return g;
  };
  op.rhs = [](const Vec&) { return 0.0; };
  op.linear = false;
  op.validate();
  return op;
}

DiffOperator laplace2d_operator() {
  return linear_operator(
      "laplace2d", 2, {MultiIndex{2, 0}, MultiIndex{0, 2}}, [](const Vec&) { return Vec::Ones(2); },
      [](const Vec&) { return 0.0; });
}

DiffOperator euler_bernoulli_operator() {
  // (EI w'')'' = EI'' w'' + 2 EI' w''' + EI w'''' = q
  DiffOperator op = linear_operator(
      "euler_bernoulli", 1, {MultiIndex{2}, MultiIndex{3}, MultiIndex{4}},
      [](const Vec& x) {
        Vec c(3);
        c << beam::rigidity_d2(x[0]), 2.0 * beam::rigidity_d1(x[0]), beam::rigidity(x[0]);
        return c;
      },
      [](const Vec& x) { return beam::load(x[0]); });
  op.singular = [](const Vec& x) { return beam::near_pole(x[0]); };
  return op;
}

}  // namespace

DiffOperator builtin(const std::string& name, int dim, const BuiltinOptions& options) {
  if (name == "dropwave") {
    if (dim > 0 && dim != 2) throw std::invalid_argument("builtin(dropwave): dimension is 2");
    return dropwave_operator();
  }
  if (name == "styblinski_tang") return styblinski_tang_operator(require_dim(name, dim));
  if (name == "rastrigin") return rastrigin_operator(require_dim(name, dim));
  if (name == "michalewicz") return michalewicz_operator(require_dim(name, dim), options.michalewicz_m);
  if (name == "cosine_mixture") return cosine_mixture_operator(require_dim(name, dim));
  if (name == "laplace2d") {
    if (dim > 0 && dim != 2) throw std::invalid_argument("builtin(laplace2d): dimension is 2");
    return laplace2d_operator();
  }
  if (name == "euler_bernoulli") {
    if (dim > 0 && dim != 1) throw std::invalid_argument("builtin(euler_bernoulli): dimension is 1");
    return euler_bernoulli_operator();
  }
  throw std::invalid_argument("unknown operator: " + name);
}

std::vector<std::string> builtin_names() {
  return {"dropwave", "styblinski_tang", "rastrigin", "michalewicz", "cosine_mixture", "laplace2d", "euler_bernoulli"};
}

double apply_to_analytic(const DiffOperator& op, const AnalyticDerivatives& f_derivs, const Vec& x) {
  std::vector<double> values;
  values.reserve(op.slots.size());
  for (const auto& alpha : op.slots) {
    std::optional<double> v = f_derivs(x, alpha);
    if (!v) throw std::invalid_argument("apply_to_analytic: derivative provider is missing a slot of " + op.name);
    values.push_back(*v);
  }
  return op.residual(x, values);
}

// ---------------------------------------------------------------------------

NetworkOperator::NetworkOperator(DiffOperator op, FdScheme scheme) : op_(std::move(op)), scheme_(std::move(scheme)) {
  op_.validate();
  if (scheme_.side.size() != op_.dim) throw std::invalid_argument("NetworkOperator: FD scheme dimension mismatch");
  stencils_.reserve(op_.slots.size());
  for (const auto& alpha : op_.slots) stencils_.push_back(fd_stencil(alpha, scheme_));
}

void NetworkOperator::check_inside(const Vec& x) const {
  if (x.size() != op_.dim) throw std::invalid_argument("NetworkOperator: point dimension mismatch");
  for (const auto& stencil : stencils_) {
    for (const auto& p : stencil) {
      if (!scheme_.eval_box.contains(x + p.offset)) {
        throw std::out_of_range("NetworkOperator: stencil leaves the evaluation box");
      }
    }
  }
}

std::vector<double> NetworkOperator::slot_values(const SurrogateParams& params, const Vec& x) const {
  check_inside(x);
  std::vector<double> values;
  values.reserve(stencils_.size());
  for (const auto& stencil : stencils_) {
    double acc = 0.0;
    for (const auto& p : stencil) acc += p.weight * forward(params, x + p.offset);
    values.push_back(acc);
  }
  return values;
}

double NetworkOperator::apply(const SurrogateParams& params, const Vec& x) const {
  return op_.residual(x, slot_values(params, x));
}

NetworkOperator::ValueAndFeature NetworkOperator::apply_with_feature(const SurrogateParams& params,
                                                                     const Vec& x) const {
  check_inside(x);
  std::vector<double> values(stencils_.size(), 0.0);
  std::vector<Vec> slot_grads(stencils_.size(), Vec::Zero(params.size()));
  for (std::size_t k = 0; k < stencils_.size(); ++k) {
    for (const auto& p : stencils_[k]) {
      ValueAndGradient vg = forward_with_gradient(params, x + p.offset);
      values[k] += p.weight * vg.value;
      slot_grads[k] += p.weight * vg.gradient;
    }
  }
  ValueAndFeature out;
  out.value = op_.residual(x, values);
  const Vec coeff = op_.slot_gradient(x, values);
  out.feature = Vec::Zero(params.size());
  for (std::size_t k = 0; k < stencils_.size(); ++k) out.feature += coeff[static_cast<Index>(k)] * slot_grads[k];
  return out;
}

double apply_to_network(const DiffOperator& op, const SurrogateParams& params, const Vec& x, const FdScheme& scheme) {
  return NetworkOperator(op, scheme).apply(params, x);
}

Vec operator_feature(const DiffOperator& op, const SurrogateParams& params0, const Vec& z, const FdScheme& scheme) {
  return NetworkOperator(op, scheme).feature(params0, z);
}

}  // namespace pinnbo
