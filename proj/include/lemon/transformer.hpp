// SPDX-License-Identifier: Apache-2.0
//
// Forward-only reference Transformer, evaluated in float64. Attention is
// bidirectional. The vision path prepends a class token and decodes from it.

#pragma once

#include <cstddef>
#include <vector>

#include "lemon/model.hpp"

namespace lemon {

struct ModelInput {
    std::vector<std::size_t> tokens;  // token input
    TensorD patches;                  // patch input, [N x patch_dim]
};

/// Concatenated heads times W_O plus b_O. Per-head products are added to a zero
/// accumulator in head order, so heads with cancelling fan-out sum to exactly zero.
TensorD mha_forward(const TensorD& x, const AttentionWeights& w, const ModelSpec& spec);

TensorD mlp_forward(const TensorD& x, const MlpWeights& w, const ModelSpec& spec);

/// LayerNorm, or RMSNorm for rms_pre.
TensorD norm_forward(const TensorD& x, const NormWeights& w, const ModelSpec& spec);

TensorD block_forward(const TensorD& x, const BlockWeights& w, const ModelSpec& spec);

/// Residual stream entering the first block, [E x D].
TensorD embed_forward(const ModelInput& input, const ModelWeights& w, const ModelSpec& spec);

/// Final norm (if any) and decoder applied to the last residual stream.
TensorD head_forward(const TensorD& h, const ModelWeights& w, const ModelSpec& spec);

/// Logits: [E x vocab] for token input, [1 x classes] for patch input.
TensorD model_forward(const ModelInput& input, const ModelWeights& w, const ModelSpec& spec);

}  // namespace lemon
