// SPDX-License-Identifier: Apache-2.0
//
// Fan-out policies: how the outgoing weights of a unit are divided among its
// replicas. Every split sums to the original vector.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lemon/rng.hpp"

namespace lemon {

enum class Policy { lemon, net2net_equal, zero_tail };

std::string policy_name(Policy policy);
/// Accepts both "net2net_equal" and "net2net-equal" spellings.
Policy parse_policy(const std::string& name);

/// Nominal multipliers for a group of n replicas, summing to 1.
///   lemon:         2(i+1) / (n(n+1)), pairwise distinct
///   net2net_equal: 1/n each
///   zero_tail:     1 for the first replica, 0 for the rest
std::vector<double> policy_coefficients(Policy policy, std::size_t n);

struct SplitOptions {
    Policy policy = Policy::lemon;
    double noise_scale = 0.02;
};

/// Splits v into n replicas. For lemon, replica i < n-1 is coef_i * v plus
/// N(0, noise_scale^2) entries and the last replica is v minus the others. For
/// net2net_equal every replica is v / n. For n == 1 the single part is v.
std::vector<std::vector<double>> split_fan_out(std::span<const double> v, std::size_t n,
                                               const SplitOptions& opts, Rng& rng);

/// True when the policy draws random tails and noise.
bool policy_is_random(Policy policy);

}  // namespace lemon
