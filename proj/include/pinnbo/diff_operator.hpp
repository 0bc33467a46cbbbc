#pragma once

#include "pinnbo/surrogate_net.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pinnbo {

/// A differential constraint N[f](x) = g(x), written as a residual over the
/// values of a fixed list of derivative slots D^alpha f(x).
///
/// `slot_gradient` returns d residual / d slot-value; for nonlinear operators
/// this is the linearization at the current slot values, which is what makes
/// the operator feature map grad_theta N[h] well defined.
struct DiffOperator {
  using Residual = std::function<double(const Vec& x, std::span<const double> slots)>;
  using SlotGradient = std::function<Vec(const Vec& x, std::span<const double> slots)>;

  std::string name;
  int dim = 0;
  std::vector<MultiIndex> slots;
  Residual residual;
  SlotGradient slot_gradient;
  std::function<double(const Vec&)> rhs;
  /// Points where the operator's coefficients blow up; collocation avoids them.
  std::function<bool(const Vec&)> singular;
  bool linear = true;

  void validate() const;
  bool is_singular(const Vec& x) const { return singular && singular(x); }
  int max_order() const;
};

/// Linear operator sum_k c_k(x) D^{alpha_k} f(x).
DiffOperator linear_operator(std::string name, int dim, std::vector<MultiIndex> slots,
                             std::function<Vec(const Vec&)> coefficients, std::function<double(const Vec&)> rhs);

struct BuiltinOptions {
  int michalewicz_m = 10;
};

/// Names: dropwave, styblinski_tang, rastrigin, michalewicz, cosine_mixture,
/// laplace2d, euler_bernoulli. `dim` <= 0 selects the operator's native
/// dimension (2 for dropwave/laplace2d, 1 for euler_bernoulli, otherwise
/// required).
DiffOperator builtin(const std::string& name, int dim = 0, const BuiltinOptions& options = {});
std::vector<std::string> builtin_names();

/// Michalewicz coefficient h_i(x_i) such that h_i d f_i/dx_i = f_i.
double michalewicz_coefficient(double xi, int i_one_based, int m);

/// Analytic derivative provider: returns nullopt for a slot it cannot supply.
using AnalyticDerivatives = std::function<std::optional<double>(const Vec& x, const MultiIndex& alpha)>;

/// N[f](x) from analytic derivatives; throws std::invalid_argument on a missing slot.
double apply_to_analytic(const DiffOperator& op, const AnalyticDerivatives& f_derivs, const Vec& x);

/// Operator bound to finite-difference stencils for a surrogate network.
class NetworkOperator {
 public:
  NetworkOperator(DiffOperator op, FdScheme scheme);

  const DiffOperator& op() const { return op_; }
  const FdScheme& scheme() const { return scheme_; }

  /// Slot values D^alpha h(x) by the stencils.
  std::vector<double> slot_values(const SurrogateParams& params, const Vec& x) const;

  /// N[h](x; theta)
  double apply(const SurrogateParams& params, const Vec& x) const;

  struct ValueAndFeature {
    double value = 0.0;
    Vec feature;
  };
  /// N[h](x) and omega(x) = grad_theta N[h](x) by the chain rule through the
  /// slot gradients and the stencil combination of parameter gradients.
  ValueAndFeature apply_with_feature(const SurrogateParams& params, const Vec& x) const;
  Vec feature(const SurrogateParams& params, const Vec& x) const { return apply_with_feature(params, x).feature; }

 private:
  void check_inside(const Vec& x) const;

  DiffOperator op_;
  FdScheme scheme_;
  std::vector<std::vector<StencilPoint>> stencils_;
};

double apply_to_network(const DiffOperator& op, const SurrogateParams& params, const Vec& x, const FdScheme& scheme);
Vec operator_feature(const DiffOperator& op, const SurrogateParams& params0, const Vec& z, const FdScheme& scheme);

}  // namespace pinnbo
