#pragma once

#include "pinnbo/diff_operator.hpp"
#include "pinnbo/surrogate_net.hpp"

#include <vector>

namespace pinnbo {

/// sum_i (y_i - nu h(x_i))^2 + sum_j (u_j - nu N[h](z_j))^2.
/// `op` may be null only when the store holds no collocation points.
double pinn_loss(const SurrogateParams& params, const ObservationStore& store, const NetworkOperator* op, double nu);

/// Loss value and its gradient in theta. Collocation terms go through the
/// operator's slot linearization.
ValueAndGradient pinn_loss_gradient(const SurrogateParams& params, const ObservationStore& store,
                                    const NetworkOperator* op, double nu);

struct TrainerOptions {
  double lr = 1e-3;
  int epochs = 100;
  double lr_decay = 0.95;  // lr_e = lr * lr_decay^e

  void validate() const;
};

struct TrainResult {
  SurrogateParams params;
  /// Loss before the first step followed by the loss after every epoch.
  std::vector<double> loss_history;
  /// True when a non-finite loss forced the learning rate to be halved.
  bool diverged_once = false;
};

/// Full-batch gradient descent. On a non-finite loss the last finite
/// parameters are restored and the remaining epochs run at half the learning
/// rate; a second failure throws NumericalError.
TrainResult train(const SurrogateParams& init, const ObservationStore& store, const NetworkOperator* op, double nu,
                  const TrainerOptions& opt);

}  // namespace pinnbo
