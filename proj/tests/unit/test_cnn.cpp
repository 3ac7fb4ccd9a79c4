// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "extra_oracles.hpp"
#include "lemon/cnn.hpp"

using namespace lemon;
using namespace lemon::testing;

namespace {

constexpr double kTol = 1e-10;

}  // namespace

TEST_CASE("conv2d matches direct loops") {
    Gen g(1);
    Conv2d c;
    c.weight = random_tensor({3, 2, 3, 3}, g);
    c.bias = random_tensor({3}, g);
    c.padding = 1;
    const TensorD x = random_tensor({2, 2, 4, 5}, g);
    CHECK(max_abs_diff(conv2d(x, c), oracle::conv(x, c)) <= 1e-12);
    c.padding = 0;
    CHECK(conv2d(x, c).shape() == Shape{2, 3, 2, 3});
    CHECK(max_abs_diff(conv2d(x, c), oracle::conv(x, c)) <= 1e-12);

    Conv2d one;
    one.weight = TensorD({1, 1, 1, 1});
    one.weight(0, 0, 0, 0) = 2;
    one.bias = TensorD::vector({1});
    TensorD px({1, 1, 1, 2});
    px(0, 0, 0, 0) = 3;
    px(0, 0, 0, 1) = -1;
    const TensorD py = conv2d(px, one);
    CHECK(py(0, 0, 0, 0) == 7);
    CHECK(py(0, 0, 0, 1) == -1);
}

TEST_CASE("bottleneck forward matches the reference") {
    Gen g(2);
    Rng rng(3);
    const Bottleneck blk = random_bottleneck(5, 3, rng);
    const TensorD x = random_tensor({2, 5, 4, 4}, g);
    CHECK(max_abs_diff(bottleneck_forward(x, blk), oracle::bottleneck(x, blk)) <= 1e-12);
}

TEST_CASE("widened bottleneck computes the same function") {
    Gen g(3);
    struct Case {
        std::size_t inner, target;
    };
    for (Case c : {Case{2, 3}, Case{4, 6}, Case{3, 7}, Case{2, 2}}) {
        for (Policy policy : {Policy::lemon, Policy::net2net_equal, Policy::zero_tail}) {
            CAPTURE(c.target);
            CAPTURE(policy_name(policy));
            Rng rng(4);
            const Bottleneck blk = random_bottleneck(4, c.inner, rng);
            const Bottleneck big = expand_cnn_bottleneck(blk, c.target, SplitOptions{policy, 0.02}, rng);
            CHECK(big.inner() == c.target);
            CHECK(big.channels() == 4);
            CHECK(big.conv2.weight.shape() == Shape{c.target, c.target, 3, 3});
            for (int trial = 0; trial < 3; ++trial) {
                const TensorD x = random_tensor({2, 4, 4, 4}, g);
                CHECK(max_abs_diff(oracle::bottleneck(x, big), oracle::bottleneck(x, blk)) <= kTol);
                CHECK(max_abs_diff(bottleneck_forward(x, big), oracle::bottleneck(x, blk)) <= kTol);
            }
            if (c.inner == c.target) {
                CHECK(big.conv2.weight == blk.conv2.weight);
                CHECK(big.conv3.weight == blk.conv3.weight);
            }
        }
    }
}

TEST_CASE("widened inner channels repeat the source channels") {
    Gen g(4);
    Rng rng(5);
    const Bottleneck blk = random_bottleneck(3, 2, rng);
    const Bottleneck big = expand_cnn_bottleneck(blk, 3, SplitOptions{Policy::lemon, 0.02}, rng);
    const TensorD x = random_tensor({1, 3, 4, 4}, g);
    const TensorD small_inner = oracle::bn(oracle::conv(oracle::bn(oracle::conv(x, blk.conv1), blk.bn1, true), blk.conv2), blk.bn2, true);
    const TensorD big_inner = oracle::bn(oracle::conv(oracle::bn(oracle::conv(x, big.conv1), big.bn1, true), big.conv2), big.bn2, true);
    double gap = 0.0;
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) gap = std::max(gap, std::abs(big_inner(0, o, i, j) - small_inner(0, o % 2, i, j)));
    CHECK(gap <= kTol);
    // the split kernels of a duplicated input channel differ under lemon
    CHECK_FALSE(big.conv3.weight(0, 0, 0, 0) == big.conv3.weight(0, 2, 0, 0));
}

TEST_CASE("narrowing is rejected") {
    Rng rng(6);
    const Bottleneck blk = random_bottleneck(3, 4, rng);
    CHECK_THROWS_AS(expand_cnn_bottleneck(blk, 3, SplitOptions{Policy::lemon, 0.02}, rng), PlanError);
}
