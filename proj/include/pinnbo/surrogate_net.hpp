#pragma once

#include "pinnbo/common.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pinnbo {

enum class Activation { tanh, relu };

Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Shape and seed of the fully-connected surrogate h(x; theta).
///
/// Layers: W_1 (m x d), W_2..W_{L-1} (m x m), W_L (1 x m). When `input_box`
/// is set, x is mapped affinely onto [map_lo, map_hi]^d before W_1; the map is
/// fixed and carries no parameters. Without biases h is odd in the mapped
/// input, so the target cube should not contain the origin.
struct SurrogateConfig {
  int input_dim = 1;
  int width = 64;
  int depth = 2;
  Activation activation = Activation::tanh;
  std::uint64_t seed = 0;
  std::optional<Box> input_box;
  double map_lo = 0.5;
  double map_hi = 1.5;

  /// p = m d + m^2 (L - 2) + m
  Index param_count() const;
  void validate() const;
};

/// Network weights stored as one flat vector theta; per-layer matrices are
/// column-major views into it.
class SurrogateParams {
 public:
  SurrogateParams(SurrogateConfig config, Vec theta);

  const SurrogateConfig& config() const { return config_; }
  const Vec& flat() const { return theta_; }
  Vec& flat() { return theta_; }
  Index size() const { return theta_.size(); }

  int layer_count() const { return config_.depth; }
  Index layer_rows(int k) const;
  Index layer_cols(int k) const;
  Index layer_offset(int k) const { return offsets_[static_cast<std::size_t>(k)]; }
  Eigen::Map<const Mat> layer(int k) const;
  Eigen::Map<Mat> layer(int k);

  std::vector<Mat> layers() const;
  static SurrogateParams from_layers(const SurrogateConfig& config, const std::vector<Mat>& layers);

 private:
  SurrogateConfig config_;
  Vec theta_;
  std::vector<Index> offsets_;
};

/// i.i.d. N(0, 1) entries drawn from the config seed.
SurrogateParams init_params(const SurrogateConfig& config);

/// h(x; theta). Every pre-activation is scaled by 1/sqrt(fan-in).
double forward(const SurrogateParams& params, const Vec& x);

struct ValueAndGradient {
  double value = 0.0;
  Vec gradient;
};

/// h(x) together with d h / d theta (reverse mode).
ValueAndGradient forward_with_gradient(const SurrogateParams& params, const Vec& x);
Vec param_gradient(const SurrogateParams& params, const Vec& x);

/// d h / d x, analytic through the input map.
Vec input_gradient(const SurrogateParams& params, const Vec& x);

// ---------------------------------------------------------------------------
// Finite-difference input derivatives

/// Per-coordinate derivative orders; all zeros means the value itself.
using MultiIndex = std::vector<int>;

int total_order(const MultiIndex& alpha);
MultiIndex unit_index(int dim, int coord, int order = 1);

constexpr int kMaxDerivativeOrder = 4;

/// Central-difference configuration. Steps are relative to the domain side
/// length; stencils of total order >= 3 use the larger step. Every stencil
/// point must stay inside `eval_box`.
struct FdScheme {
  Vec side;
  double rel_step = 1e-3;
  double high_order_rel_step = 1e-2;
  bool richardson = false;
  Box eval_box;

  /// Default scheme for a domain: evaluation box grown by 10% per side.
  static FdScheme for_domain(const Box& domain);
  double step(int coord, int order) const;
};

struct StencilPoint {
  Vec offset;
  double weight = 0.0;
};

/// Tensor-product central stencil for D^alpha. Throws std::invalid_argument
/// when |alpha| exceeds kMaxDerivativeOrder or alpha has the wrong length.
std::vector<StencilPoint> fd_stencil(const MultiIndex& alpha, const FdScheme& scheme);

/// D^alpha f(x) by the stencil of fd_stencil; throws std::out_of_range when a
/// stencil point leaves the evaluation box.
double fd_derivative(const std::function<double(const Vec&)>& f, const Vec& x,
                     const MultiIndex& alpha, const FdScheme& scheme);

double input_derivative(const SurrogateParams& params, const Vec& x, const MultiIndex& alpha,
                        const FdScheme& scheme);

// ---------------------------------------------------------------------------

struct Observation {
  Vec x;
  double value = 0.0;
};

/// Expensive observations D_t = {(x_i, y_i)} and the collocation set
/// R = {(z_j, u_j)}, in insertion order.
class ObservationStore {
 public:
  explicit ObservationStore(Box domain) : domain_(std::move(domain)) {}

  void add_expensive(Vec x, double y);
  void add_collocation(Vec z, double u);

  const Box& domain() const { return domain_; }
  const std::vector<Observation>& expensive() const { return expensive_; }
  const std::vector<Observation>& collocation() const { return collocation_; }

 private:
  Box domain_;
  std::vector<Observation> expensive_;
  std::vector<Observation> collocation_;
};

}  // namespace pinnbo
