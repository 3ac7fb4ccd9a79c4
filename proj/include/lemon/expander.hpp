// SPDX-License-Identifier: Apache-2.0
//
// Whole-model width and depth expansion.
//
// Residual stream layout after width expansion, by norm style:
//   pre_ln        V_avg   (LayerNorm maps V_avg to V_zero for the modules)
//   post_ln       tiled   (widths must divide, so every mode coincides)
//   post_res_norm V_zero  (module outputs are V_avg until their LayerNorm)
//   rms_pre       V_zero  (RMSNorm keeps V_zero; module outputs use zero tails)

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lemon/expansion.hpp"
#include "lemon/model.hpp"
#include "lemon/policy.hpp"
#include "lemon/rng.hpp"

namespace lemon {

/// type1 zeroes the output layer of each module of an inserted block. type2
/// keeps nonzero fan-out that cancels exactly within groups of identical units.
/// type1_aki is type1 with the non-output weights taken from the next block.
enum class DepthMode { type1, type2, type1_aki };

std::string depth_mode_name(DepthMode mode);
DepthMode parse_depth_mode(const std::string& name);

struct ExpansionPlan {
    std::size_t target_width = 0;
    std::size_t target_depth = 0;
    Policy policy = Policy::lemon;
    DepthMode depth_mode = DepthMode::type1;
    std::uint64_t seed = 0;
    double noise_scale = 0.02;
};

/// Replicas of one unit. axis 1: members index columns of `tensor`; axis 0: rows.
/// The selected row or column is the fan-out vector of the replica.
struct DuplicateGroup {
    std::string tensor;
    std::size_t axis = 1;
    std::vector<std::size_t> members;

    friend bool operator==(const DuplicateGroup&, const DuplicateGroup&) = default;
};

using DuplicateMap = std::vector<DuplicateGroup>;

struct WidthPlan {
    std::size_t d_s = 0;
    std::size_t d_t = 0;
    std::size_t head_dim = 0;
    std::size_t hidden_s = 0;
    std::size_t hidden_t = 0;
    NormStyle style = NormStyle::pre_ln;
    SplitOptions split;

    std::size_t k() const { return d_t / d_s; }
};

WidthPlan make_width_plan(const ModelSpec& spec, std::size_t target_width, const SplitOptions& split);

/// Tail mode of the residual stream (and embeddings) for a norm style.
VecMode residual_mode(NormStyle style);
/// Row mode used for the last linear layer of each module.
VecMode module_output_mode(NormStyle style);

/// Column-random split of m [P x D_S] to D_T columns: the copies of column c
/// share m[:, c] per the policy, and the tail holds N(0, noise^2) entries.
ColumnSplit make_rand_split(const TensorD& m, std::size_t d_t, const SplitOptions& opts, Rng& rng);
/// Column-circular split: column c is shared by floor(D_T/D_S) copies plus the
/// residual part when c < D_T mod D_S.
ColumnSplit make_circ_split(const TensorD& m, std::size_t d_t, const SplitOptions& opts, Rng& rng);

AttentionWeights expand_mha(const AttentionWeights& w, const WidthPlan& plan, Rng& rng);
MlpWeights expand_mlp(const MlpWeights& w, const WidthPlan& plan, Rng& rng);
/// LayerNorm (or RMSNorm for rms_pre) with LN tail drawn from Unif(-1, 1).
NormWeights expand_norm(const NormWeights& w, double eps, const WidthPlan& plan, Rng& rng);
BlockWeights expand_block_width(const BlockWeights& w, double eps, const WidthPlan& plan, Rng& rng);

/// Token, positional, class and patch-projection weights expanded with residual_mode.
void expand_embeddings(const ModelWeights& src, const ModelSpec& spec, const WidthPlan& plan,
                       ModelWeights& dst);

/// Untied: column-random decoder. Tied: final-norm weight and bias scaled by
/// 1/floor(D_T/D_S); dst.final_norm must already hold the expanded norm.
void expand_decoder(const ModelWeights& src, const ModelSpec& spec, const WidthPlan& plan, Rng& rng,
                    ModelWeights& dst);

/// Copies per source block: floor or ceil of L_T/L_S, extras to earlier blocks.
std::vector<std::size_t> depth_multiplicities(std::size_t l_s, std::size_t l_t);

struct DepthResult {
    std::vector<BlockWeights> blocks;
    /// Source block each target block derives from.
    std::vector<std::size_t> source;
    /// True for blocks inserted by depth expansion.
    std::vector<bool> inserted;
};

/// `blocks` are already at width plan.d_t; plan.d_s and plan.hidden_s give the
/// replica groups that type2 cancels over.
DepthResult expand_depth(const std::vector<BlockWeights>& blocks, const WidthPlan& plan,
                         std::size_t target_depth, DepthMode mode, const Rng& root);

/// Throws PlanError for plans the construction cannot make lossless.
void validate_plan(const ModelSpec& spec, const ExpansionPlan& plan);

struct ExpandedModel {
    ModelSpec spec;
    ModelWeights weights;
    DuplicateMap duplicate_map;
    std::vector<bool> inserted;
};

/// Width expansion, then depth expansion. Deterministic in (weights, spec, plan).
ExpandedModel expand_model(const ModelWeights& w, const ModelSpec& spec, const ExpansionPlan& plan);

}  // namespace lemon
