// SPDX-License-Identifier: Apache-2.0

#include "lemon/model.hpp"

#include <cmath>

namespace lemon {

std::string norm_style_name(NormStyle style) {
    switch (style) {
        case NormStyle::pre_ln: return "pre_ln";
        case NormStyle::post_res_norm: return "post_res_norm";
        case NormStyle::post_ln: return "post_ln";
        case NormStyle::rms_pre: return "rms_pre";
    }
    return "?";
}

NormStyle parse_norm_style(const std::string& name) {
    for (NormStyle s : {NormStyle::pre_ln, NormStyle::post_res_norm, NormStyle::post_ln,
                        NormStyle::rms_pre}) {
        if (norm_style_name(s) == name) {
            return s;
        }
    }
    throw PlanError("unknown norm_style '" + name + "'");
}

std::string activation_name(Activation kind) { return kind == Activation::gelu ? "gelu" : "relu"; }

Activation parse_activation(const std::string& name) {
    if (name == "gelu") {
        return Activation::gelu;
    }
    if (name == "relu") {
        return Activation::relu;
    }
    throw PlanError("unknown activation '" + name + "'");
}

std::string input_kind_name(InputKind kind) { return kind == InputKind::tokens ? "tokens" : "patches"; }

InputKind parse_input_kind(const std::string& name) {
    if (name == "tokens") {
        return InputKind::tokens;
    }
    if (name == "patches") {
        return InputKind::patches;
    }
    throw PlanError("unknown input kind '" + name + "'");
}

std::size_t mlp_hidden(double mlp_ratio, std::size_t width) {
    return static_cast<std::size_t>(std::llround(mlp_ratio * static_cast<double>(width)));
}

std::size_t ModelSpec::hidden() const { return mlp_hidden(mlp_ratio, width); }

void ModelSpec::validate() const {
    if (width == 0 || head_dim == 0) {
        throw PlanError("width and head_dim must be positive");
    }
    if (width % head_dim != 0) {
        throw PlanError("width " + std::to_string(width) + " is not a multiple of head_dim " +
                        std::to_string(head_dim));
    }
    if (!(mlp_ratio > 0.0) || !std::isfinite(mlp_ratio) || hidden() == 0) {
        throw PlanError("mlp_ratio must give a positive hidden width");
    }
    if (vocab_or_classes == 0) {
        throw PlanError("vocab_or_classes must be positive");
    }
    if (!(eps >= 0.0) || !std::isfinite(eps)) {
        throw PlanError("eps must be finite and non-negative");
    }
    if (max_positions == 0) {
        throw PlanError("max_positions must be positive");
    }
    if (input == InputKind::patches) {
        if (patch_dim == 0) {
            throw PlanError("patch input needs a positive patch_dim");
        }
        if (max_positions < 2) {
            throw PlanError("patch input needs max_positions >= 2 (class token plus one patch)");
        }
        if (tied_decoder) {
            throw PlanError("a tied decoder requires token input");
        }
    }
}

std::string block_prefix(std::size_t index) { return "blocks." + std::to_string(index) + "."; }

namespace {

template <typename Weights, typename Slot>
std::vector<Slot> collect_slots(Weights& w, const ModelSpec& spec) {
    const std::size_t d = spec.width;
    const std::size_t hd = spec.heads() * spec.head_dim;
    const std::size_t hid = spec.hidden();
    std::vector<Slot> out;
    auto add = [&out](std::string name, Shape shape, auto* t) {
        out.push_back(Slot{std::move(name), std::move(shape), t});
    };
    if (spec.input == InputKind::tokens) {
        add("embed.token", {spec.vocab_or_classes, d}, &w.token_embed);
    } else {
        add("embed.patch.weight", {d, spec.patch_dim}, &w.patch_w);
        add("embed.patch.bias", {d}, &w.patch_b);
        add("embed.cls", {d}, &w.cls);
    }
    add("embed.position", {spec.max_positions, d}, &w.pos_embed);
    for (std::size_t i = 0; i < w.blocks.size(); ++i) {
        auto& b = w.blocks[i];
        const std::string p = block_prefix(i);
        add(p + "ln1.weight", {d}, &b.ln1.weight);
        if (spec.norms_have_bias()) {
            add(p + "ln1.bias", {d}, &b.ln1.bias);
        }
        add(p + "attn.q.weight", {d, hd}, &b.attn.wq);
        add(p + "attn.q.bias", {hd}, &b.attn.bq);
        add(p + "attn.k.weight", {d, hd}, &b.attn.wk);
        add(p + "attn.k.bias", {hd}, &b.attn.bk);
        add(p + "attn.v.weight", {d, hd}, &b.attn.wv);
        add(p + "attn.v.bias", {hd}, &b.attn.bv);
        add(p + "attn.out.weight", {hd, d}, &b.attn.wo);
        add(p + "attn.out.bias", {d}, &b.attn.bo);
        add(p + "ln2.weight", {d}, &b.ln2.weight);
        if (spec.norms_have_bias()) {
            add(p + "ln2.bias", {d}, &b.ln2.bias);
        }
        add(p + "mlp.fc1.weight", {hid, d}, &b.mlp.fc1_w);
        add(p + "mlp.fc1.bias", {hid}, &b.mlp.fc1_b);
        add(p + "mlp.fc2.weight", {d, hid}, &b.mlp.fc2_w);
        add(p + "mlp.fc2.bias", {d}, &b.mlp.fc2_b);
    }
    if (spec.has_final_norm()) {
        add("final_norm.weight", {d}, &w.final_norm.weight);
        if (spec.norms_have_bias()) {
            add("final_norm.bias", {d}, &w.final_norm.bias);
        }
    }
    if (!spec.tied_decoder) {
        add("decoder.weight", {spec.vocab_or_classes, d}, &w.decoder_w);
        add("decoder.bias", {spec.vocab_or_classes}, &w.decoder_b);
    }
    return out;
}

}  // namespace

std::vector<TensorSlot> tensor_slots(ModelWeights& w, const ModelSpec& spec) {
    w.blocks.resize(spec.depth);
    return collect_slots<ModelWeights, TensorSlot>(w, spec);
}

std::vector<ConstTensorSlot> tensor_slots(const ModelWeights& w, const ModelSpec& spec) {
    if (w.blocks.size() != spec.depth) {
        throw ShapeError("model has " + std::to_string(w.blocks.size()) + " blocks, spec says " +
                         std::to_string(spec.depth));
    }
    return collect_slots<const ModelWeights, ConstTensorSlot>(w, spec);
}

void check_weights(const ModelWeights& w, const ModelSpec& spec) {
    for (const auto& slot : tensor_slots(w, spec)) {
        if (slot.tensor->shape() != slot.shape) {
            throw ShapeError(slot.name + " has shape " + shape_string(slot.tensor->shape()) +
                             ", expected " + shape_string(slot.shape));
        }
    }
}

}  // namespace lemon
