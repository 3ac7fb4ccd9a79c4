// SPDX-License-Identifier: Apache-2.0

#include "lemon/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lemon/parallel.hpp"

namespace lemon {

namespace {

void require_compatible(const ModelSpec& a, const ModelSpec& b) {
    if (a.input != b.input) {
        throw PlanError("models take different input kinds");
    }
    if (a.vocab_or_classes != b.vocab_or_classes) {
        throw PlanError("models have different vocab/class counts (" + std::to_string(a.vocab_or_classes) +
                        " vs " + std::to_string(b.vocab_or_classes) + ")");
    }
    if (a.input == InputKind::patches && a.patch_dim != b.patch_dim) {
        throw PlanError("models have different patch sizes");
    }
}

bool ends_with(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool contains(const std::string& s, std::string_view part) { return s.find(part) != std::string::npos; }

}  // namespace

ModelInput random_input(const ModelSpec& a, const ModelSpec& b, Rng& rng) {
    require_compatible(a, b);
    const std::size_t positions = std::min(a.max_positions, b.max_positions);
    ModelInput in;
    if (a.input == InputKind::tokens) {
        const std::size_t n = std::min<std::size_t>(8, positions);
        for (std::size_t e = 0; e < n; ++e) {
            in.tokens.push_back(static_cast<std::size_t>(rng.below(a.vocab_or_classes)));
        }
    } else {
        const std::size_t n = std::min<std::size_t>(4, positions - 1);
        in.patches = TensorD({n, a.patch_dim});
        for (double& v : in.patches.data()) {
            v = rng.normal();
        }
    }
    return in;
}

VerifyReport verify_lossless(const Checkpoint& small, const Checkpoint& big, std::size_t samples,
                             std::uint64_t seed, double tol) {
    require_compatible(small.spec, big.spec);
    if (samples == 0) {
        throw PlanError("verify needs at least one sample");
    }
    if (!(tol >= 0.0)) {
        throw PlanError("tolerance must be non-negative");
    }
    check_weights(small.weights, small.spec);
    check_weights(big.weights, big.spec);
    const Rng root(seed);
    VerifyReport report;
    report.tol = tol;
    report.samples.resize(samples);
    parallel_for(samples, [&](std::size_t s) {
        Rng rng = root.substream("sample", s);
        const ModelInput in = random_input(small.spec, big.spec, rng);
        const TensorD ys = model_forward(in, small.weights, small.spec);
        const TensorD yb = model_forward(in, big.weights, big.spec);
        SampleDiff d;
        d.sample = s;
        for (std::size_t i = 0; i < ys.rows(); ++i) {
            for (std::size_t j = 0; j < ys.cols(); ++j) {
                const double diff = std::abs(ys(i, j) - yb(i, j));
                if (diff > d.max_abs_diff) {
                    d.max_abs_diff = diff;
                    d.row = i;
                    d.col = j;
                }
            }
        }
        report.samples[s] = d;
    });
    for (const auto& d : report.samples) {
        if (d.max_abs_diff > report.max_abs_diff) {
            report.max_abs_diff = d.max_abs_diff;
            report.worst_sample = d.sample;
        }
    }
    report.pass = report.max_abs_diff <= tol;
    return report;
}

VerifyReport verify_lossless(const std::string& small_path, const std::string& big_path, std::size_t samples,
                             std::uint64_t seed, double tol) {
    return verify_lossless(read_checkpoint(small_path), read_checkpoint(big_path), samples, seed, tol);
}

std::vector<GroupSymmetry> symmetry_report(const Checkpoint& ckpt) {
    if (!ckpt.duplicate_map) {
        throw PlanError("checkpoint has no duplicate map (missing map)");
    }
    std::map<std::string, const TensorD*> by_name;
    for (const auto& slot : tensor_slots(ckpt.weights, ckpt.spec)) {
        by_name.emplace(slot.name, slot.tensor);
    }
    std::vector<GroupSymmetry> out;
    for (const auto& g : *ckpt.duplicate_map) {
        auto it = by_name.find(g.tensor);
        if (it == by_name.end()) {
            throw ShapeError("duplicate map names unknown tensor '" + g.tensor + "'");
        }
        const TensorD& t = *it->second;
        const std::size_t count = g.axis == 0 ? t.rows() : t.cols();
        const std::size_t length = g.axis == 0 ? t.cols() : t.rows();
        for (std::size_t m : g.members) {
            if (m >= count) {
                throw ShapeError("duplicate map member " + std::to_string(m) + " out of range for '" + g.tensor + "'");
            }
        }
        auto at = [&](std::size_t member, std::size_t i) { return g.axis == 0 ? t(member, i) : t(i, member); };
        GroupSymmetry gs{g, g.members.size() < 2 ? 0.0 : std::numeric_limits<double>::infinity()};
        for (std::size_t a = 0; a < g.members.size(); ++a) {
            for (std::size_t b = a + 1; b < g.members.size(); ++b) {
                double dist = 0.0;
                for (std::size_t i = 0; i < length; ++i) {
                    dist = std::max(dist, std::abs(at(g.members[a], i) - at(g.members[b], i)));
                }
                gs.min_distance = std::min(gs.min_distance, dist);
            }
        }
        out.push_back(std::move(gs));
    }
    return out;
}

ModelWeights init_random_weights(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    const Rng root(seed);
    ModelWeights w;
    for (auto& slot : tensor_slots(w, spec)) {
        Rng rng = root.substream(slot.name);
        TensorD t(slot.shape);
        const std::string& n = slot.name;
        const bool is_norm = contains(n, "ln1.") || contains(n, "ln2.") || n.starts_with("final_norm.");
        if (is_norm && ends_with(n, ".weight")) {
            for (double& v : t.data()) {
                v = 1.0 + rng.normal(0.0, 0.1);
            }
        } else if (ends_with(n, ".bias")) {
            for (double& v : t.data()) {
                v = rng.normal(0.0, 0.1);
            }
        } else if (n == "embed.token" || n == "embed.position" || n == "embed.cls") {
            for (double& v : t.data()) {
                v = rng.normal();
            }
        } else {
            // q/k/v are stored [in x out] and out.weight [H*d x D]; the rest are [out x in].
            const bool in_by_rows = contains(n, "attn.");
            const std::size_t fan_in = in_by_rows ? t.dim(0) : t.dim(1);
            const double std = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (double& v : t.data()) {
                v = rng.normal(0.0, std);
            }
        }
        *slot.tensor = std::move(t);
    }
    round_to_storage(w, spec);
    return w;
}

}  // namespace lemon
