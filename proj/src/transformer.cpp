// SPDX-License-Identifier: Apache-2.0

#include "lemon/transformer.hpp"

#include <cmath>

namespace lemon {

namespace {

void require_width(const TensorD& x, std::size_t d, const char* op) {
    if (x.rank() != 2 || x.cols() != d) {
        throw ShapeError(std::string(op) + ": input " + shape_string(x.shape()) +
                         " does not have trailing extent " + std::to_string(d));
    }
}

TensorD column_block(const TensorD& m, std::size_t begin, std::size_t count) {
    TensorD out({m.rows(), count});
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < count; ++j) {
            out(i, j) = m(i, begin + j);
        }
    }
    return out;
}

TensorD row_block(const TensorD& m, std::size_t begin, std::size_t count) {
    TensorD out({count, m.cols()});
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            out(i, j) = m(begin + i, j);
        }
    }
    return out;
}

TensorD vector_block(const TensorD& v, std::size_t begin, std::size_t count) {
    TensorD out({count});
    for (std::size_t j = 0; j < count; ++j) {
        out[j] = v[begin + j];
    }
    return out;
}

}  // namespace

TensorD mha_forward(const TensorD& x, const AttentionWeights& w, const ModelSpec& spec) {
    require_width(x, w.wq.rows(), "mha_forward");
    const std::size_t d = spec.head_dim;
    const std::size_t heads = w.wq.cols() / d;
    const std::size_t tokens = x.rows();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    TensorD acc({tokens, w.wo.cols()});
    for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * d;
        TensorD q = add_bias(matmul(x, column_block(w.wq, c0, d)), vector_block(w.bq, c0, d));
        TensorD k = add_bias(matmul(x, column_block(w.wk, c0, d)), vector_block(w.bk, c0, d));
        TensorD v = add_bias(matmul(x, column_block(w.wv, c0, d)), vector_block(w.bv, c0, d));
        TensorD attn = softmax_rows(scale(matmul_nt(q, k), inv_sqrt_d));
        TensorD head = matmul(attn, v);
        acc = add(acc, matmul(head, row_block(w.wo, c0, d)));
    }
    return add_bias(acc, w.bo);
}

TensorD mlp_forward(const TensorD& x, const MlpWeights& w, const ModelSpec& spec) {
    TensorD hidden = activation(linear(x, w.fc1_w, w.fc1_b), spec.activation);
    return linear(hidden, w.fc2_w, w.fc2_b);
}

TensorD norm_forward(const TensorD& x, const NormWeights& w, const ModelSpec& spec) {
    if (spec.norm_style == NormStyle::rms_pre) {
        return rmsnorm(x, w.weight, spec.eps);
    }
    return layernorm(x, w.weight, w.bias, spec.eps);
}

TensorD block_forward(const TensorD& x, const BlockWeights& w, const ModelSpec& spec) {
    require_width(x, spec.width, "block_forward");
    switch (spec.norm_style) {
        case NormStyle::pre_ln:
        case NormStyle::rms_pre: {
            TensorD h = add(x, mha_forward(norm_forward(x, w.ln1, spec), w.attn, spec));
            return add(h, mlp_forward(norm_forward(h, w.ln2, spec), w.mlp, spec));
        }
        case NormStyle::post_ln: {
            TensorD h = norm_forward(add(x, mha_forward(x, w.attn, spec)), w.ln1, spec);
            return norm_forward(add(h, mlp_forward(h, w.mlp, spec)), w.ln2, spec);
        }
        case NormStyle::post_res_norm: {
            TensorD h = add(x, norm_forward(mha_forward(x, w.attn, spec), w.ln1, spec));
            return add(h, norm_forward(mlp_forward(h, w.mlp, spec), w.ln2, spec));
        }
    }
    return x;
}

TensorD embed_forward(const ModelInput& input, const ModelWeights& w, const ModelSpec& spec) {
    const std::size_t d = spec.width;
    if (spec.input == InputKind::tokens) {
        const std::size_t n = input.tokens.size();
        if (n == 0 || n > spec.max_positions) {
            throw ShapeError("token sequence length " + std::to_string(n) + " outside [1, " +
                             std::to_string(spec.max_positions) + "]");
        }
        TensorD h({n, d});
        for (std::size_t e = 0; e < n; ++e) {
            const std::size_t id = input.tokens[e];
            if (id >= spec.vocab_or_classes) {
                throw ShapeError("token id " + std::to_string(id) + " out of range for vocab " +
                                 std::to_string(spec.vocab_or_classes));
            }
            for (std::size_t j = 0; j < d; ++j) {
                h(e, j) = w.token_embed(id, j) + w.pos_embed(e, j);
            }
        }
        check_finite(h, "embed");
        return h;
    }
    const TensorD& p = input.patches;
    if (p.rank() != 2 || p.cols() != spec.patch_dim) {
        throw ShapeError("patches must be [N x " + std::to_string(spec.patch_dim) + "], got " +
                         shape_string(p.shape()));
    }
    if (p.rows() + 1 > spec.max_positions) {
        throw ShapeError("too many patches for max_positions " + std::to_string(spec.max_positions));
    }
    TensorD proj = linear(p, w.patch_w, w.patch_b);
    TensorD h({p.rows() + 1, d});
    for (std::size_t j = 0; j < d; ++j) {
        h(0, j) = w.cls[j] + w.pos_embed(0, j);
    }
    for (std::size_t e = 0; e < p.rows(); ++e) {
        for (std::size_t j = 0; j < d; ++j) {
            h(e + 1, j) = proj(e, j) + w.pos_embed(e + 1, j);
        }
    }
    check_finite(h, "embed");
    return h;
}

TensorD head_forward(const TensorD& h, const ModelWeights& w, const ModelSpec& spec) {
    TensorD z = spec.has_final_norm() ? norm_forward(h, w.final_norm, spec) : h;
    if (spec.input == InputKind::patches) {
        z = row_block(z, 0, 1);
    }
    if (spec.tied_decoder) {
        return matmul_nt(z, w.token_embed);
    }
    return linear(z, w.decoder_w, w.decoder_b);
}

TensorD model_forward(const ModelInput& input, const ModelWeights& w, const ModelSpec& spec) {
    if (w.blocks.size() != spec.depth) {
        throw ShapeError("model has " + std::to_string(w.blocks.size()) + " blocks, spec says " +
                         std::to_string(spec.depth));
    }
    TensorD h = embed_forward(input, w, spec);
    for (const auto& block : w.blocks) {
        h = block_forward(h, block, spec);
    }
    return head_forward(h, w, spec);
}

}  // namespace lemon
