// SPDX-License-Identifier: Apache-2.0
//
// Scalar two-layer network f(x) = v . act(W1 x) with a hand-written gradient,
// used to show how fan-out splits decide whether replicated hidden units can
// ever diverge under gradient descent.

#pragma once

#include <cstddef>
#include <vector>

#include "lemon/kernels.hpp"
#include "lemon/policy.hpp"

namespace lemon {

struct ToyMlp {
    TensorD w1;  // [hidden x in]
    TensorD v;   // [hidden]
    Activation act = Activation::gelu;
};

double activation_derivative(double x, Activation kind);

double toy_forward(const ToyMlp& m, const TensorD& x);

/// One SGD step on 0.5 * (f(x) - y)^2.
ToyMlp toy_sgd_step(const ToyMlp& m, const TensorD& x, double y, double lr);

/// Hidden unit j of the result copies the fan-in of unit j mod hidden_s; the
/// fan-out v is split among the copies of each unit per the policy.
ToyMlp expand_toy_mlp(const ToyMlp& m, std::size_t hidden_t, const SplitOptions& opts, Rng& rng);

/// Replica groups {z, z + h_s, ...} with at least two members.
std::vector<std::vector<std::size_t>> toy_duplicate_groups(std::size_t hidden_s, std::size_t hidden_t);

}  // namespace lemon
