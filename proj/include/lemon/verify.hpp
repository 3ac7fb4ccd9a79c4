// SPDX-License-Identifier: Apache-2.0
//
// Equivalence checks between checkpoints, fan-out symmetry reports and random
// model fixtures.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lemon/checkpoint.hpp"
#include "lemon/transformer.hpp"

namespace lemon {

struct SampleDiff {
    std::size_t sample = 0;
    double max_abs_diff = 0.0;
    /// Logit position of the largest difference.
    std::size_t row = 0;
    std::size_t col = 0;
};

struct VerifyReport {
    double max_abs_diff = 0.0;
    double tol = 0.0;
    bool pass = true;
    std::size_t worst_sample = 0;
    std::vector<SampleDiff> samples;
};

/// Seeded random input valid for both specs: up to 8 tokens, or up to 4
/// N(0, 1) patches.
ModelInput random_input(const ModelSpec& a, const ModelSpec& b, Rng& rng);

/// Evaluates both models on `samples` inputs drawn from per-sample substreams
/// of `seed`; passes iff the largest |logit difference| is <= tol. Samples run
/// in parallel (capped by LEMON_THREADS); the report does not depend on it.
VerifyReport verify_lossless(const Checkpoint& small, const Checkpoint& big, std::size_t samples,
                             std::uint64_t seed, double tol);
VerifyReport verify_lossless(const std::string& small_path, const std::string& big_path, std::size_t samples,
                             std::uint64_t seed, double tol);

struct GroupSymmetry {
    DuplicateGroup group;
    /// Minimum L-infinity distance between the fan-out vectors of any two members.
    double min_distance = 0.0;
};

/// One entry per duplicate group. PlanError if the checkpoint carries no duplicate map.
std::vector<GroupSymmetry> symmetry_report(const Checkpoint& ckpt);

/// Deterministic random weights: linear weights N(0, 1/fan_in), biases
/// N(0, 0.01), norm weights 1 + N(0, 0.01), embeddings N(0, 1). Rounded to the
/// storage dtype.
ModelWeights init_random_weights(const ModelSpec& spec, std::uint64_t seed);

}  // namespace lemon
