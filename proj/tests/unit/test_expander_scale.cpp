// SPDX-License-Identifier: Apache-2.0
//
// Full-size expansions, checked on short sequences to keep the forward cheap.

#include <doctest.h>

#include "lemon/expander.hpp"
#include "lemon/verify.hpp"
#include "test_support.hpp"

using namespace lemon;
using namespace lemon::testing;

namespace {

void check_full_size(NormStyle style, std::size_t width, DepthMode mode) {
    Gen g(width);
    ModelSpec spec;
    spec.norm_style = style;
    spec.depth = 6;
    spec.width = width;
    spec.head_dim = 64;
    spec.mlp_ratio = 4.0;
    spec.vocab_or_classes = 32;
    spec.max_positions = 8;
    const ModelWeights w = init_random_weights(spec, 3);
    ExpansionPlan plan;
    plan.target_width = 768;
    plan.target_depth = 12;
    plan.depth_mode = mode;
    plan.seed = 11;
    const ExpandedModel big = expand_model(w, spec, plan);
    CHECK(big.spec.heads() == 12);
    CHECK(big.spec.hidden() == 3072);
    CHECK(max_logit_gap(w, spec, big.weights, big.spec, random_token_inputs(spec, 2, 4, g)) <= 1e-10);
}

}  // namespace

TEST_CASE("6 x 384 to 12 x 768") {
    check_full_size(NormStyle::pre_ln, 384, DepthMode::type1);
}

TEST_CASE("6 x 512 to 12 x 768") {
    check_full_size(NormStyle::post_res_norm, 512, DepthMode::type2);
}
