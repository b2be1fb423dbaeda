#pragma once

// Neural-network checks over TensorStats streams. Nothing here sees raw
// parameter values: the inputs are the summaries carried by ModelUpdate.

#include <span>

#include "rldx/config.hpp"
#include "rldx/rl_checks.hpp"
#include "rldx/stats.hpp"
#include "rldx/trace.hpp"

namespace rldx {

/// Tensor roles are read from names: a name containing "bias" is a bias,
/// anything else in the parameter lists is a weight.
bool is_bias_tensor(const std::string& name);

enum class ActivationKind { Rectifier, Tanh, Sigmoid, Other };
/// "relu", "leaky", "elu" -> Rectifier; "tanh" -> Tanh; "sigmoid"/"logistic" ->
/// Sigmoid (case-insensitive substring match).
ActivationKind activation_kind(const std::string& name);

/// NN.W1, NN.W2 over `updates` (consecutive, oldest first); NN.W3 and NN.B1
/// on updates.front() when `includes_first` is set.
Findings check_parameters(std::span<const event::ModelUpdate> updates, bool includes_first,
                          const NnThresholds& th);

/// sqrt of the sum of squared per-tensor norms.
double total_grad_norm(const event::ModelUpdate& u);

/// NN.G1 and NN.G2.
Findings check_gradients(std::span<const event::ModelUpdate> updates, const NnThresholds& th);

/// NN.A1 and NN.A2.
Findings check_activations(std::span<const event::ModelUpdate> updates,
                           const NnThresholds& th);

/// NN.L1, NN.L2 (info) and NN.L3 over the loss series indexed by update.
Findings check_loss(const Series& loss, const NnThresholds& th);

}  // namespace rldx
