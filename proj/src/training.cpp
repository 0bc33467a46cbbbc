#include "pinnbo/training.hpp"

#include <cmath>

namespace pinnbo {

namespace {

void check_compatible(const SurrogateParams& params, const ObservationStore& store, const NetworkOperator* op) {
  if (params.config().input_dim != store.domain().dim()) {
    throw std::invalid_argument("pinn_loss: network input dimension differs from the domain");
  }
  if (!store.collocation().empty() && op == nullptr) {
    throw std::invalid_argument("pinn_loss: collocation points need an operator");
  }
  if (op != nullptr && op->op().dim != store.domain().dim()) {
    throw std::invalid_argument("pinn_loss: operator dimension differs from the domain");
  }
}

}  // namespace

double pinn_loss(const SurrogateParams& params, const ObservationStore& store, const NetworkOperator* op, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("pinn_loss: nu must be positive");
  check_compatible(params, store, op);
  double loss = 0.0;
  for (const auto& obs : store.expensive()) {
    const double r = obs.value - nu * forward(params, obs.x);
    loss += r * r;
  }
  for (const auto& obs : store.collocation()) {
    const double r = obs.value - nu * op->apply(params, obs.x);
    loss += r * r;
  }
  return loss;
}

ValueAndGradient pinn_loss_gradient(const SurrogateParams& params, const ObservationStore& store,
                                    const NetworkOperator* op, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("pinn_loss: nu must be positive");
  check_compatible(params, store, op);
  ValueAndGradient out;
  out.gradient = Vec::Zero(params.size());
  for (const auto& obs : store.expensive()) {
    const ValueAndGradient h = forward_with_gradient(params, obs.x);
    const double r = obs.value - nu * h.value;
    out.value += r * r;
    out.gradient -= (2.0 * nu * r) * h.gradient;
  }
  for (const auto& obs : store.collocation()) {
    const auto n = op->apply_with_feature(params, obs.x);
    const double r = obs.value - nu * n.value;
    out.value += r * r;
    out.gradient -= (2.0 * nu * r) * n.feature;
  }
  return out;
}

void TrainerOptions::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("TrainerOptions: lr must be positive");
  if (epochs < 0) throw std::invalid_argument("TrainerOptions: epochs must be non-negative");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("TrainerOptions: lr_decay must be positive");
}

TrainResult train(const SurrogateParams& init, const ObservationStore& store, const NetworkOperator* op, double nu,
                  const TrainerOptions& opt) {
  opt.validate();
  TrainResult result{init, {}, false};
  if (opt.epochs == 0) {
    result.loss_history.push_back(pinn_loss(init, store, op, nu));
    return result;
  }

  SurrogateParams& params = result.params;
  Vec last_finite = params.flat();
  double lr = opt.lr;
  ValueAndGradient lg = pinn_loss_gradient(params, store, op, nu);
  if (!std::isfinite(lg.value)) throw NumericalError("train: initial loss is not finite");
  result.loss_history.push_back(lg.value);

  for (int e = 0; e < opt.epochs; ++e) {
    last_finite = params.flat();
    params.flat() -= (lr * std::pow(opt.lr_decay, e)) * lg.gradient;
    lg = pinn_loss_gradient(params, store, op, nu);
    if (!std::isfinite(lg.value) || !lg.gradient.allFinite()) {
      if (result.diverged_once) throw NumericalError("train: loss diverged after halving the learning rate");
      result.diverged_once = true;
      params.flat() = last_finite;
      lr *= 0.5;
      lg = pinn_loss_gradient(params, store, op, nu);
      --e;
      continue;
    }
    result.loss_history.push_back(lg.value);
  }
  return result;
}

}  // namespace pinnbo
