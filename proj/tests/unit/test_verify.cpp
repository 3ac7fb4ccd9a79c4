// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "lemon/error.hpp"
#include "lemon/expander.hpp"
#include "lemon/verify.hpp"
#include "test_support.hpp"

using namespace lemon;
using namespace lemon::testing;

namespace {

struct Pair {
    Checkpoint small, big;
};

Pair expanded_pair(Policy policy, std::uint64_t seed = 1) {
    Pair p;
    p.small.spec = small_spec(NormStyle::pre_ln, 2, 8);
    p.small.weights = init_random_weights(p.small.spec, 21);
    ExpansionPlan plan;
    plan.target_width = 12;
    plan.target_depth = 3;
    plan.policy = policy;
    plan.seed = seed;
    ExpandedModel e = expand_model(p.small.weights, p.small.spec, plan);
    p.big.spec = e.spec;
    p.big.weights = std::move(e.weights);
    p.big.duplicate_map = std::move(e.duplicate_map);
    return p;
}

}  // namespace

TEST_CASE("expanded model passes verification") {
    const Pair p = expanded_pair(Policy::lemon);
    const VerifyReport r = verify_lossless(p.small, p.big, 16, 3, 1e-10);
    CHECK(r.pass);
    CHECK(r.max_abs_diff <= 1e-10);
    CHECK(r.tol == 1e-10);
    CHECK(r.samples.size() == 16);
}

TEST_CASE("a perturbed weight fails and is localized") {
    Pair p = expanded_pair(Policy::lemon);
    p.big.weights.decoder_b[3] += 1e-3;
    const VerifyReport r = verify_lossless(p.small, p.big, 8, 3, 1e-10);
    CHECK_FALSE(r.pass);
    CHECK(r.max_abs_diff == doctest::Approx(1e-3).epsilon(1e-6));
    const SampleDiff& worst = r.samples[r.worst_sample];
    CHECK(worst.max_abs_diff == r.max_abs_diff);
    CHECK(worst.col == 3);
}

TEST_CASE("self comparison is exact and reports are reproducible") {
    const Pair p = expanded_pair(Policy::lemon);
    CHECK(verify_lossless(p.big, p.big, 8, 5, 0.0).max_abs_diff == 0.0);
    const VerifyReport a = verify_lossless(p.small, p.big, 8, 5, 1e-10);
    const VerifyReport b = verify_lossless(p.small, p.big, 8, 5, 1e-10);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].max_abs_diff == b.samples[i].max_abs_diff);
        CHECK(a.samples[i].row == b.samples[i].row);
    }
}

TEST_CASE("file based verification") {
    const Pair p = expanded_pair(Policy::net2net_equal);
    const auto s = temp_path("verify_small.lemn").string(), b = temp_path("verify_big.lemn").string();
    write_checkpoint(p.small, s);
    write_checkpoint(p.big, b);
    CHECK(verify_lossless(s, b, 4, 1, 1e-10).pass);
}

TEST_CASE("incompatible inputs are rejected") {
    Pair p = expanded_pair(Policy::lemon);
    p.big.spec.vocab_or_classes = 5;
    p.big.weights.decoder_w = TensorD({5, 12});
    p.big.weights.decoder_b = TensorD({5});
    CHECK_THROWS(verify_lossless(p.small, p.big, 2, 1, 1e-10));
}

TEST_CASE("symmetry report") {
    const Pair lem = expanded_pair(Policy::lemon);
    const auto rep = symmetry_report(lem.big);
    REQUIRE(rep.size() == lem.big.duplicate_map->size());
    for (const auto& g : rep) CHECK(g.min_distance > 1e-6 * 0.02);

    for (const auto& g : symmetry_report(expanded_pair(Policy::net2net_equal).big)) CHECK(g.min_distance == 0.0);

    Checkpoint plain = lem.small;
    plain.duplicate_map = DuplicateMap{};
    CHECK(symmetry_report(plain).empty());
    plain.duplicate_map.reset();
    CHECK_THROWS_AS(symmetry_report(plain), PlanError);
}

TEST_CASE("random init") {
    const ModelSpec spec = small_spec(NormStyle::rms_pre, 2, 8);
    const ModelWeights a = init_random_weights(spec, 9);
    const ModelWeights b = init_random_weights(spec, 9);
    const ModelWeights c = init_random_weights(spec, 10);
    CHECK(a.blocks[1].mlp.fc1_w == b.blocks[1].mlp.fc1_w);
    CHECK_FALSE(a.blocks[1].mlp.fc1_w == c.blocks[1].mlp.fc1_w);
    CHECK(a.blocks[0].ln1.bias.data().empty());
    CHECK_NOTHROW(check_weights(a, spec));

    ModelSpec f32 = spec;
    f32.dtype = DType::f32;
    const ModelWeights r = init_random_weights(f32, 9);
    const double v = r.blocks[0].attn.wq(1, 2);
    CHECK(v == static_cast<double>(static_cast<float>(v)));

    ModelSpec bad = spec;
    bad.width = 10;
    CHECK_THROWS_AS(init_random_weights(bad, 1), PlanError);
}
