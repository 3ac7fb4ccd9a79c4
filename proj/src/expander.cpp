// SPDX-License-Identifier: Apache-2.0

#include "lemon/expander.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "lemon/kernels.hpp"
#include "lemon/parallel.hpp"

namespace lemon {

std::string depth_mode_name(DepthMode mode) {
    switch (mode) {
        case DepthMode::type1: return "type1";
        case DepthMode::type2: return "type2";
        case DepthMode::type1_aki: return "type1_aki";
    }
    return "?";
}

DepthMode parse_depth_mode(const std::string& name) {
    std::string norm = name;
    std::replace(norm.begin(), norm.end(), '-', '_');
    for (DepthMode m : {DepthMode::type1, DepthMode::type2, DepthMode::type1_aki}) {
        if (depth_mode_name(m) == norm) {
            return m;
        }
    }
    throw PlanError("unknown depth mode '" + name + "'");
}

WidthPlan make_width_plan(const ModelSpec& spec, std::size_t target_width, const SplitOptions& split) {
    WidthPlan p;
    p.d_s = spec.width;
    p.d_t = target_width;
    p.head_dim = spec.head_dim;
    p.hidden_s = spec.hidden();
    p.hidden_t = mlp_hidden(spec.mlp_ratio, target_width);
    p.style = spec.norm_style;
    p.split = split;
    return p;
}

VecMode residual_mode(NormStyle style) {
    switch (style) {
        case NormStyle::pre_ln:
        case NormStyle::post_ln: return VecMode::avg;
        case NormStyle::post_res_norm:
        case NormStyle::rms_pre: return VecMode::zero;
    }
    return VecMode::avg;
}

VecMode module_output_mode(NormStyle style) {
    return style == NormStyle::rms_pre ? VecMode::zero : VecMode::avg;
}

namespace {

std::vector<double> column_of(const TensorD& m, std::size_t c) {
    std::vector<double> col(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        col[i] = m(i, c);
    }
    return col;
}

TensorD random_tail(std::size_t rows, std::size_t r, const SplitOptions& opts, Rng& rng) {
    if (r == 0) {
        return {};
    }
    TensorD tail({rows, r});
    if (policy_is_random(opts.policy)) {
        for (double& v : tail.data()) {
            v = rng.normal(0.0, opts.noise_scale);
        }
    }
    return tail;
}

}  // namespace

ColumnSplit make_rand_split(const TensorD& m, std::size_t d_t, const SplitOptions& opts, Rng& rng) {
    const std::size_t p = m.rows();
    const std::size_t d_s = m.cols();
    const std::size_t k = d_t / d_s;
    ColumnSplit split;
    split.parts.assign(k, TensorD({p, d_s}));
    for (std::size_t c = 0; c < d_s; ++c) {
        const auto pieces = split_fan_out(column_of(m, c), k, opts, rng);
        for (std::size_t b = 0; b < k; ++b) {
            for (std::size_t i = 0; i < p; ++i) {
                split.parts[b](i, c) = pieces[b][i];
            }
        }
    }
    split.tail = random_tail(p, d_t % d_s, opts, rng);
    return split;
}

ColumnSplit make_circ_split(const TensorD& m, std::size_t d_t, const SplitOptions& opts, Rng& rng) {
    const std::size_t p = m.rows();
    const std::size_t d_s = m.cols();
    const std::size_t k = d_t / d_s;
    const std::size_t r = d_t % d_s;
    ColumnSplit split;
    split.parts.assign(k, TensorD({p, d_s}));
    if (r > 0) {
        split.tail = TensorD({p, r});
    }
    for (std::size_t c = 0; c < d_s; ++c) {
        const std::size_t n = k + (c < r ? 1 : 0);
        const auto pieces = split_fan_out(column_of(m, c), n, opts, rng);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t b = 0; b < k; ++b) {
                split.parts[b](i, c) = pieces[b][i];
            }
            if (c < r) {
                split.tail(i, c) = pieces[k][i];
            }
        }
    }
    return split;
}

AttentionWeights expand_mha(const AttentionWeights& w, const WidthPlan& plan, Rng& rng) {
    const std::size_t d = plan.head_dim;
    if (plan.d_t % d != 0) {
        throw PlanError("target width " + std::to_string(plan.d_t) + " is not a multiple of head_dim " +
                        std::to_string(d));
    }
    const std::size_t heads_s = plan.d_s / d;
    const std::size_t heads_t = plan.d_t / d;

    // Each target head copies source head h mod H_S; its input rows get a fresh
    // column-random split of the transposed head block.
    auto expand_proj = [&](const TensorD& wm, const TensorD& bias, std::string_view tag,
                           TensorD& out_w, TensorD& out_b) {
        Rng r = rng.substream(tag);
        out_w = TensorD({plan.d_t, heads_t * d});
        out_b = TensorD({heads_t * d});
        for (std::size_t ht = 0; ht < heads_t; ++ht) {
            const std::size_t hs = ht % heads_s;
            TensorD head_t({d, plan.d_s});
            for (std::size_t i = 0; i < plan.d_s; ++i) {
                for (std::size_t c = 0; c < d; ++c) {
                    head_t(c, i) = wm(i, hs * d + c);
                }
            }
            const TensorD grown =
                expand_matrix_cols(head_t, plan.d_t, ColMode::rand, make_rand_split(head_t, plan.d_t, plan.split, r));
            for (std::size_t i = 0; i < plan.d_t; ++i) {
                for (std::size_t c = 0; c < d; ++c) {
                    out_w(i, ht * d + c) = grown(c, i);
                }
            }
            for (std::size_t c = 0; c < d; ++c) {
                out_b[ht * d + c] = bias[hs * d + c];
            }
        }
    };

    AttentionWeights out;
    expand_proj(w.wq, w.bq, "q", out.wq, out.bq);
    expand_proj(w.wk, w.bk, "k", out.wk, out.bk);
    expand_proj(w.wv, w.bv, "v", out.wv, out.bv);

    const VecMode out_mode = module_output_mode(plan.style);
    Rng r = rng.substream("out");
    const TensorD rows = expand_matrix_rows(transpose(w.wo), plan.d_t, out_mode);
    out.wo = transpose(expand_matrix_cols(rows, plan.d_t, ColMode::circ, make_circ_split(rows, plan.d_t, plan.split, r)));
    out.bo = expand_bias(w.bo, plan.d_t, out_mode);
    return out;
}

MlpWeights expand_mlp(const MlpWeights& w, const WidthPlan& plan, Rng& rng) {
    MlpWeights out;
    Rng r1 = rng.substream("fc1");
    const TensorD fc1_rows = expand_matrix_rows(w.fc1_w, plan.hidden_t, VecMode::circ);
    out.fc1_w = expand_matrix_cols(fc1_rows, plan.d_t, ColMode::rand,
                                   make_rand_split(fc1_rows, plan.d_t, plan.split, r1));
    out.fc1_b = expand_bias(w.fc1_b, plan.hidden_t, VecMode::circ);

    const VecMode out_mode = module_output_mode(plan.style);
    Rng r2 = rng.substream("fc2");
    const TensorD fc2_rows = expand_matrix_rows(w.fc2_w, plan.d_t, out_mode);
    out.fc2_w = expand_matrix_cols(fc2_rows, plan.hidden_t, ColMode::circ,
                                   make_circ_split(fc2_rows, plan.hidden_t, plan.split, r2));
    out.fc2_b = expand_bias(w.fc2_b, plan.d_t, out_mode);
    return out;
}

NormWeights expand_norm(const NormWeights& w, double eps, const WidthPlan& plan, Rng& rng) {
    std::vector<double> zeta(plan.d_t % plan.d_s, 0.0);
    if (policy_is_random(plan.split.policy)) {
        for (double& z : zeta) {
            z = rng.uniform(-1.0, 1.0);
        }
    }
    ExpandedNorm e = plan.style == NormStyle::rms_pre ? expand_rmsnorm(w.weight, eps, plan.d_t, zeta)
                                                      : expand_layernorm(w.weight, w.bias, eps, plan.d_t, zeta);
    return NormWeights{std::move(e.weight), std::move(e.bias)};
}

BlockWeights expand_block_width(const BlockWeights& w, double eps, const WidthPlan& plan, Rng& rng) {
    BlockWeights out;
    Rng r_ln1 = rng.substream("ln1");
    Rng r_attn = rng.substream("attn");
    Rng r_ln2 = rng.substream("ln2");
    Rng r_mlp = rng.substream("mlp");
    out.ln1 = expand_norm(w.ln1, eps, plan, r_ln1);
    out.attn = expand_mha(w.attn, plan, r_attn);
    out.ln2 = expand_norm(w.ln2, eps, plan, r_ln2);
    out.mlp = expand_mlp(w.mlp, plan, r_mlp);
    return out;
}

void expand_embeddings(const ModelWeights& src, const ModelSpec& spec, const WidthPlan& plan,
                       ModelWeights& dst) {
    const VecMode mode = residual_mode(plan.style);
    auto expand_rows_as_vectors = [&](const TensorD& table) {
        TensorD out({table.rows(), plan.d_t});
        for (std::size_t i = 0; i < table.rows(); ++i) {
            const TensorD row({table.cols()}, std::vector<double>(table.row(i).begin(), table.row(i).end()));
            const TensorD grown = expand_vector(row, plan.d_t, mode);
            std::copy_n(grown.data().begin(), plan.d_t, out.row(i).begin());
        }
        return out;
    };
    if (spec.input == InputKind::tokens) {
        dst.token_embed = expand_rows_as_vectors(src.token_embed);
    } else {
        dst.patch_w = expand_matrix_rows(src.patch_w, plan.d_t, mode);
        dst.patch_b = expand_bias(src.patch_b, plan.d_t, mode);
        dst.cls = expand_vector(src.cls, plan.d_t, mode);
    }
    dst.pos_embed = expand_rows_as_vectors(src.pos_embed);
}

void expand_decoder(const ModelWeights& src, const ModelSpec& spec, const WidthPlan& plan, Rng& rng,
                    ModelWeights& dst) {
    if (spec.tied_decoder) {
        if (!spec.has_final_norm()) {
            return;
        }
        const double s = 1.0 / static_cast<double>(plan.k());
        dst.final_norm.weight = scale(dst.final_norm.weight, s);
        if (!dst.final_norm.bias.empty()) {
            dst.final_norm.bias = scale(dst.final_norm.bias, s);
        }
        return;
    }
    dst.decoder_w = expand_matrix_cols(src.decoder_w, plan.d_t, ColMode::rand,
                                       make_rand_split(src.decoder_w, plan.d_t, plan.split, rng));
    dst.decoder_b = src.decoder_b;
}

std::vector<std::size_t> depth_multiplicities(std::size_t l_s, std::size_t l_t) {
    if (l_t < l_s) {
        throw PlanError("target depth " + std::to_string(l_t) + " is below source depth " + std::to_string(l_s));
    }
    if (l_s == 0) {
        if (l_t != 0) {
            throw PlanError("cannot grow a model without blocks");
        }
        return {};
    }
    std::vector<std::size_t> m(l_s, l_t / l_s);
    for (std::size_t i = 0; i < l_t % l_s; ++i) {
        ++m[i];
    }
    return m;
}

namespace {

NormWeights identity_norm(const NormWeights& like) {
    NormWeights n;
    n.weight = TensorD::filled(like.weight.shape(), 1.0);
    if (!like.bias.empty()) {
        n.bias = TensorD(like.bias.shape());
    }
    return n;
}

void zero_module_outputs(BlockWeights& b) {
    b.attn.wo = TensorD(b.attn.wo.shape());
    b.attn.bo = TensorD(b.attn.bo.shape());
    b.mlp.fc2_w = TensorD(b.mlp.fc2_w.shape());
    b.mlp.fc2_b = TensorD(b.mlp.fc2_b.shape());
}

/// Fan-out multipliers for a group of n identical units, grouped into
/// segments that each cancel exactly: pairs (1, -1) and, for odd n, a final
/// triple (1, 1, -2). A lone unit gets 0.
std::vector<std::pair<std::size_t, std::vector<double>>> cancel_segments(std::size_t n) {
    std::vector<std::pair<std::size_t, std::vector<double>>> segs;
    if (n < 2) {
        return segs;
    }
    std::size_t i = 0;
    const std::size_t pairs_end = n % 2 == 0 ? n : n - 3;
    for (; i < pairs_end; i += 2) {
        segs.push_back({i, {1.0, -1.0}});
    }
    if (n % 2 == 1) {
        segs.push_back({i, {1.0, 1.0, -2.0}});
    }
    return segs;
}

/// Inserted block whose heads and hidden units come in consecutive groups of
/// bitwise-identical copies. Within a group the fan-out rows/columns are
/// multiples of one random draw that sum to zero, and the reference kernels add
/// the members in order from zero, so the module output is exactly zero.
BlockWeights make_type2_block(const BlockWeights& rep, const WidthPlan& plan, Rng& rng) {
    const std::size_t d = plan.head_dim;
    const std::size_t heads_s = plan.d_s / d;
    const std::size_t heads_t = plan.d_t / d;
    const double sigma = policy_is_random(plan.split.policy) ? plan.split.noise_scale : 0.0;

    BlockWeights b = rep;
    b.attn.wo = TensorD(rep.attn.wo.shape());
    b.attn.bo = TensorD(rep.attn.bo.shape());
    std::size_t next = 0;
    for (std::size_t s = 0; s < heads_s; ++s) {
        const std::size_t n = heads_t / heads_s + (s < heads_t % heads_s ? 1 : 0);
        for (std::size_t m = 0; m < n; ++m) {
            const std::size_t ht = next + m;
            for (std::size_t c = 0; c < d; ++c) {
                for (std::size_t i = 0; i < plan.d_t; ++i) {
                    b.attn.wq(i, ht * d + c) = rep.attn.wq(i, s * d + c);
                    b.attn.wk(i, ht * d + c) = rep.attn.wk(i, s * d + c);
                    b.attn.wv(i, ht * d + c) = rep.attn.wv(i, s * d + c);
                }
                b.attn.bq[ht * d + c] = rep.attn.bq[s * d + c];
                b.attn.bk[ht * d + c] = rep.attn.bk[s * d + c];
                b.attn.bv[ht * d + c] = rep.attn.bv[s * d + c];
            }
        }
        for (const auto& [start, mult] : cancel_segments(n)) {
            for (std::size_t c = 0; c < d; ++c) {
                for (std::size_t j = 0; j < plan.d_t; ++j) {
                    const double phi = rng.normal(0.0, sigma);
                    for (std::size_t m = 0; m < mult.size(); ++m) {
                        b.attn.wo((next + start + m) * d + c, j) = mult[m] * phi;
                    }
                }
            }
        }
        next += n;
    }

    b.mlp.fc2_w = TensorD(rep.mlp.fc2_w.shape());
    b.mlp.fc2_b = TensorD(rep.mlp.fc2_b.shape());
    next = 0;
    for (std::size_t z = 0; z < plan.hidden_s; ++z) {
        const std::size_t n = plan.hidden_t / plan.hidden_s + (z < plan.hidden_t % plan.hidden_s ? 1 : 0);
        for (std::size_t m = 0; m < n; ++m) {
            std::copy_n(rep.mlp.fc1_w.row(z).begin(), plan.d_t, b.mlp.fc1_w.row(next + m).begin());
            b.mlp.fc1_b[next + m] = rep.mlp.fc1_b[z];
        }
        for (const auto& [start, mult] : cancel_segments(n)) {
            for (std::size_t j = 0; j < plan.d_t; ++j) {
                const double phi = rng.normal(0.0, sigma);
                for (std::size_t m = 0; m < mult.size(); ++m) {
                    b.mlp.fc2_w(j, next + start + m) = mult[m] * phi;
                }
            }
        }
        next += n;
    }
    return b;
}

}  // namespace

DepthResult expand_depth(const std::vector<BlockWeights>& blocks, const WidthPlan& plan,
                         std::size_t target_depth, DepthMode mode, const Rng& root) {
    const auto mult = depth_multiplicities(blocks.size(), target_depth);
    struct Origin {
        std::size_t source;
        std::size_t copy;
    };
    std::vector<Origin> layout;
    for (std::size_t i = 0; i < mult.size(); ++i) {
        for (std::size_t j = 0; j < mult[i]; ++j) {
            layout.push_back({i, j});
        }
    }

    DepthResult out;
    out.blocks.resize(layout.size());
    out.source.resize(layout.size());
    out.inserted.resize(layout.size());
    for (std::size_t t = 0; t < layout.size(); ++t) {
        out.source[t] = layout[t].source;
        out.inserted[t] = layout[t].copy > 0;
    }

    parallel_for(layout.size(), [&](std::size_t t) {
        const auto [i, j] = layout[t];
        const bool post_ln = plan.style == NormStyle::post_ln;
        if (j == 0) {
            out.blocks[t] = blocks[i];
            if (post_ln && mult[i] > 1) {
                out.blocks[t].ln2 = identity_norm(blocks[i].ln2);
            }
            return;
        }
        if (plan.style == NormStyle::post_res_norm) {
            BlockWeights b = blocks[i];
            b.ln1.weight = TensorD(b.ln1.weight.shape());
            b.ln1.bias = TensorD(b.ln1.bias.shape());
            b.ln2.weight = TensorD(b.ln2.weight.shape());
            b.ln2.bias = TensorD(b.ln2.bias.shape());
            out.blocks[t] = std::move(b);
            return;
        }
        Rng rng = root.substream("insert", t);
        BlockWeights b;
        switch (mode) {
            case DepthMode::type1:
                b = blocks[i];
                zero_module_outputs(b);
                break;
            case DepthMode::type1_aki:
                b = blocks[std::min(i + 1, blocks.size() - 1)];
                zero_module_outputs(b);
                break;
            case DepthMode::type2:
                b = make_type2_block(blocks[i], plan, rng);
                break;
        }
        if (post_ln) {
            // Norm(Norm(x)) == Norm(x) with eps 0, so identity-affine norms pass the
            // normalised stream through; the last copy restores the source affine.
            b.ln1 = identity_norm(blocks[i].ln1);
            b.ln2 = j + 1 == mult[i] ? blocks[i].ln2 : identity_norm(blocks[i].ln2);
        }
        out.blocks[t] = std::move(b);
    });
    return out;
}

void validate_plan(const ModelSpec& spec, const ExpansionPlan& plan) {
    spec.validate();
    if (plan.target_width < spec.width) {
        throw PlanError("target width " + std::to_string(plan.target_width) + " is below source width " +
                        std::to_string(spec.width));
    }
    if (plan.target_depth < spec.depth) {
        throw PlanError("target depth " + std::to_string(plan.target_depth) + " is below source depth " +
                        std::to_string(spec.depth));
    }
    if (spec.depth == 0 && plan.target_depth > 0) {
        throw PlanError("cannot grow a model without blocks");
    }
    if (plan.target_width % spec.head_dim != 0) {
        throw PlanError("target width " + std::to_string(plan.target_width) + " is not a multiple of head_dim " +
                        std::to_string(spec.head_dim));
    }
    if (!(plan.noise_scale >= 0.0) || !std::isfinite(plan.noise_scale)) {
        throw PlanError("noise_scale must be finite and non-negative");
    }
    if (spec.norm_style == NormStyle::post_ln) {
        if (plan.target_width % spec.width != 0) {
            throw PlanError("post_ln expansion needs the target width to be a multiple of the source width");
        }
        if (plan.target_depth > spec.depth && spec.eps != 0.0) {
            throw PlanError("post_ln depth expansion is only lossless with eps = 0");
        }
    }
    if (spec.tied_decoder && !spec.has_final_norm() && plan.target_width / spec.width > 1) {
        throw PlanError("a tied decoder without a final norm cannot absorb the 1/k rescale");
    }
}

namespace {

DuplicateMap build_duplicate_map(const WidthPlan& plan, const DepthResult& depth) {
    DuplicateMap map;
    const std::size_t k = plan.k();
    const std::size_t r = plan.d_t % plan.d_s;
    const std::size_t kh = plan.hidden_t / plan.hidden_s;
    const std::size_t rh = plan.hidden_t % plan.hidden_s;
    for (std::size_t t = 0; t < depth.blocks.size(); ++t) {
        if (depth.inserted[t]) {
            continue;
        }
        const std::string p = block_prefix(t);
        for (std::size_t z = 0; z < plan.hidden_s; ++z) {
            DuplicateGroup g{p + "mlp.fc2.weight", 1, {}};
            for (std::size_t m = 0; m < kh + (z < rh ? 1 : 0); ++m) {
                g.members.push_back(z + m * plan.hidden_s);
            }
            if (g.members.size() > 1) {
                map.push_back(std::move(g));
            }
        }
        for (std::size_t c = 0; c < plan.d_s; ++c) {
            DuplicateGroup g{p + "attn.out.weight", 0, {}};
            for (std::size_t m = 0; m < k + (c < r ? 1 : 0); ++m) {
                g.members.push_back(c + m * plan.d_s);
            }
            if (g.members.size() > 1) {
                map.push_back(std::move(g));
            }
        }
        if (k >= 2) {
            for (std::size_t c = 0; c < plan.d_s; ++c) {
                DuplicateGroup g{p + "mlp.fc1.weight", 1, {}};
                for (std::size_t m = 0; m < k; ++m) {
                    g.members.push_back(c + m * plan.d_s);
                }
                map.push_back(std::move(g));
            }
        }
    }
    return map;
}

}  // namespace

ExpandedModel expand_model(const ModelWeights& w, const ModelSpec& spec, const ExpansionPlan& plan) {
    validate_plan(spec, plan);
    check_weights(w, spec);
    const WidthPlan wp = make_width_plan(spec, plan.target_width, SplitOptions{plan.policy, plan.noise_scale});
    const Rng root(plan.seed);

    std::vector<BlockWeights> widened(spec.depth);
    parallel_for(spec.depth, [&](std::size_t i) {
        Rng rng = root.substream("block", i);
        widened[i] = expand_block_width(w.blocks[i], spec.eps, wp, rng);
    });

    ExpandedModel out;
    expand_embeddings(w, spec, wp, out.weights);
    if (spec.has_final_norm()) {
        Rng rng = root.substream("final_norm");
        out.weights.final_norm = expand_norm(w.final_norm, spec.eps, wp, rng);
    }
    Rng dec_rng = root.substream("decoder");
    expand_decoder(w, spec, wp, dec_rng, out.weights);

    DepthResult depth = expand_depth(widened, wp, plan.target_depth, plan.depth_mode, root.substream("depth"));
    out.duplicate_map = build_duplicate_map(wp, depth);
    out.weights.blocks = std::move(depth.blocks);
    out.inserted = std::move(depth.inserted);

    out.spec = spec;
    out.spec.width = plan.target_width;
    out.spec.depth = plan.target_depth;
    const double eta = norm_eta(spec.width, plan.target_width);
    out.spec.eps = eta * eta * spec.eps;
    check_weights(out.weights, out.spec);
    return out;
}

}  // namespace lemon
