#pragma once

#include <vector>

#include "cotrl/env.hpp"

namespace cotrl {

/// Fixed-length encoding of the symbolic state the policy conditions on.
///   NumberLine: one-hot target ++ one-hot current.
///   EZPoints/Points24: dealt card-value counts ++ formula token counts ++
///     one-hot last formula token (with an extra slot for the empty formula).
///   Blackjack: one-hot player sum 4..21 ++ one-hot dealer upcard 1..10 ++
///     usable-ace bit.
std::vector<double> observation_features(const Observation& obs);

/// Dimension of observation_features for a task under the given options.
int feature_dim(TaskId task, const EnvOptions& options = {});

}  // namespace cotrl
