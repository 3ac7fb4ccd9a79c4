// SPDX-License-Identifier: Apache-2.0
//
// Architecture descriptor and named weight layout of the reference Transformer.
//
// Tensor naming (shared by the checkpoint container and the duplicate map):
//   embed.token [V x D]          token input only
//   embed.patch.weight [D x P]   patch input only, with embed.patch.bias [D], embed.cls [D]
//   embed.position [max_positions x D]
//   blocks.{i}.ln1.weight/bias   bias absent for rms_pre
//   blocks.{i}.attn.{q,k,v}.weight [D x H*d]  head h owns columns h*d .. h*d+d-1
//   blocks.{i}.attn.{q,k,v}.bias [H*d]
//   blocks.{i}.attn.out.weight [H*d x D], blocks.{i}.attn.out.bias [D]
//   blocks.{i}.ln2.weight/bias
//   blocks.{i}.mlp.fc1.weight [hidden x D], blocks.{i}.mlp.fc1.bias [hidden]
//   blocks.{i}.mlp.fc2.weight [D x hidden], blocks.{i}.mlp.fc2.bias [D]
//   final_norm.weight/bias       pre_ln (LayerNorm) and rms_pre (RMSNorm, no bias) only
//   decoder.weight [C x D], decoder.bias [C]   absent when tied

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lemon/kernels.hpp"
#include "lemon/tensor.hpp"

namespace lemon {

enum class NormStyle { pre_ln, post_res_norm, post_ln, rms_pre };
enum class InputKind { tokens, patches };

std::string norm_style_name(NormStyle style);
NormStyle parse_norm_style(const std::string& name);
std::string activation_name(Activation kind);
Activation parse_activation(const std::string& name);
std::string input_kind_name(InputKind kind);
InputKind parse_input_kind(const std::string& name);

struct ModelSpec {
    NormStyle norm_style = NormStyle::pre_ln;
    std::size_t depth = 1;
    std::size_t width = 8;
    std::size_t head_dim = 4;
    double mlp_ratio = 4.0;
    std::size_t vocab_or_classes = 16;
    bool tied_decoder = false;
    Activation activation = Activation::gelu;
    /// Shared by every norm layer of the model.
    double eps = 1e-5;
    InputKind input = InputKind::tokens;
    std::size_t max_positions = 16;
    std::size_t patch_dim = 0;
    DType dtype = DType::f64;

    std::size_t heads() const { return width / head_dim; }
    std::size_t hidden() const;
    bool has_final_norm() const {
        return norm_style == NormStyle::pre_ln || norm_style == NormStyle::rms_pre;
    }
    bool norms_have_bias() const { return norm_style != NormStyle::rms_pre; }

    /// Throws PlanError when the descriptor is inconsistent.
    void validate() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Hidden width of an MLP for a given residual width: round(mlp_ratio * width).
std::size_t mlp_hidden(double mlp_ratio, std::size_t width);

struct NormWeights {
    TensorD weight;
    TensorD bias;  // empty for RMSNorm
};

struct AttentionWeights {
    TensorD wq, bq, wk, bk, wv, bv;
    TensorD wo, bo;
};

struct MlpWeights {
    TensorD fc1_w, fc1_b;
    TensorD fc2_w, fc2_b;
};

struct BlockWeights {
    NormWeights ln1;
    AttentionWeights attn;
    NormWeights ln2;
    MlpWeights mlp;
};

struct ModelWeights {
    TensorD token_embed;
    TensorD patch_w, patch_b, cls;
    TensorD pos_embed;
    std::vector<BlockWeights> blocks;
    NormWeights final_norm;
    TensorD decoder_w, decoder_b;
};

struct TensorSlot {
    std::string name;
    Shape shape;
    TensorD* tensor;
};

struct ConstTensorSlot {
    std::string name;
    Shape shape;
    const TensorD* tensor;
};

/// Every tensor the ModelSpec calls for, in canonical order. The mutable overload
/// resizes the block list to spec.depth first.
std::vector<TensorSlot> tensor_slots(ModelWeights& w, const ModelSpec& spec);
std::vector<ConstTensorSlot> tensor_slots(const ModelWeights& w, const ModelSpec& spec);

/// Throws ShapeError naming the first tensor whose shape disagrees with the ModelSpec.
void check_weights(const ModelWeights& w, const ModelSpec& spec);

std::string block_prefix(std::size_t index);

}  // namespace lemon
