// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <limits>

#include "lemon/kernels.hpp"
#include "test_support.hpp"

using namespace lemon;
using lemon::testing::Gen;
using lemon::testing::random_tensor;

TEST_CASE("matmul small products") {
    const TensorD a = TensorD::matrix({{1, 2}, {3, 4}});
    CHECK(matmul(a, TensorD::matrix({{1}, {1}})) == TensorD::matrix({{3}, {7}}));
    CHECK(matmul(TensorD::matrix({{1, 0}, {0, 1}}), a) == a);
    CHECK(max_abs(matmul(a, TensorD({2, 3}))) == 0.0);
    CHECK_THROWS_AS(matmul(a, TensorD({3, 1})), ShapeError);
}

TEST_CASE("matmul_nt and linear agree with hand-written loops") {
    Gen g(3);
    const TensorD x = random_tensor({3, 5}, g);
    const TensorD w = random_tensor({4, 5}, g);
    const TensorD b = random_tensor({4}, g);
    const TensorD y = linear(x, w, b);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t o = 0; o < 4; ++o) {
            double s = 0.0;
            for (std::size_t l = 0; l < 5; ++l) s += x(i, l) * w(o, l);
            CHECK(y(i, o) == doctest::Approx(s + b[o]).epsilon(1e-14));
        }
    }
    CHECK(matmul_nt(x, w) == matmul(x, transpose(w)));
}

TEST_CASE("matmul is associative within tolerance") {
    Gen g(11);
    for (int trial = 0; trial < 20; ++trial) {
        const TensorD a = random_tensor({3, 4}, g), b = random_tensor({4, 5}, g), c = random_tensor({5, 2}, g);
        CHECK(max_abs_diff(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) <= 1e-12);
        const TensorF af = a.cast<float>(), bf = b.cast<float>(), cf = c.cast<float>();
        CHECK(max_abs_diff(matmul(matmul(af, bf), cf), matmul(af, matmul(bf, cf))) <= 1e-5f);
    }
}

TEST_CASE("layernorm examples") {
    const TensorD ones = TensorD::vector({1, 1});
    const TensorD zeros = TensorD::vector({0, 0});
    CHECK(layernorm(TensorD::matrix({{1, 3}}), ones, zeros, 0.0) == TensorD::matrix({{-1, 1}}));

    const TensorD beta = TensorD::vector({0.5, -2});
    CHECK(layernorm(TensorD::matrix({{7, 7}}), ones, beta, 1e-5) == TensorD::matrix({{0.5, -2}}));

    const TensorD fixed = TensorD::matrix({{-1, 1}});
    CHECK(layernorm(fixed, ones, zeros, 0.0) == fixed);

    CHECK_THROWS_AS(layernorm(TensorD::matrix({{2, 2}}), ones, zeros, 0.0), NumericError);
}

TEST_CASE("layernorm output is standardized per row") {
    Gen g(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t d = lemon::testing::pick(g, 2, 9);
        const TensorD x = random_tensor({3, d}, g, 4.0);
        const TensorD y = layernorm(x, TensorD::filled({d}, 1.0), TensorD({d}), 0.0);
        for (std::size_t i = 0; i < 3; ++i) {
            double mean = 0.0, var = 0.0;
            for (std::size_t j = 0; j < d; ++j) mean += y(i, j);
            mean /= static_cast<double>(d);
            for (std::size_t j = 0; j < d; ++j) var += (y(i, j) - mean) * (y(i, j) - mean);
            var /= static_cast<double>(d);
            CHECK(std::abs(mean) <= 1e-12);
            CHECK(std::abs(var - 1.0) <= 1e-12);
        }
        const TensorF yf = layernorm(x.cast<float>(), TensorF::filled({d}, 1.0f), TensorF({d}), 0.0f);
        CHECK(max_abs_diff(yf.cast<double>(), y) <= 1e-5);
    }
}

TEST_CASE("rmsnorm examples") {
    const TensorD ones = TensorD::vector({1, 1});
    CHECK(rmsnorm(TensorD::matrix({{1, -1}}), ones, 0.0) == TensorD::matrix({{1, -1}}));
    const TensorD y = rmsnorm(TensorD::matrix({{2, 0}}), ones, 0.0);
    CHECK(y(0, 0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(y(0, 1) == 0.0);
    CHECK(rmsnorm(TensorD({1, 2}), ones, 1e-5) == TensorD({1, 2}));
    CHECK_THROWS_AS(rmsnorm(TensorD({1, 2}), ones, 0.0), NumericError);
}

TEST_CASE("softmax rows") {
    const TensorD u = softmax_rows(TensorD::matrix({{2, 2, 2, 2}}));
    for (double v : u.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

    const TensorD p = softmax_rows(TensorD::matrix({{0, std::log(3.0)}}));
    CHECK(p(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(p(0, 1) == doctest::Approx(0.75).epsilon(1e-14));

    CHECK(softmax_rows(TensorD::matrix({{-3}, {40}})) == TensorD::matrix({{1}, {1}}));

    Gen g(8);
    const TensorD r = softmax_rows(random_tensor({6, 9}, g, 20.0));
    for (std::size_t i = 0; i < 6; ++i) {
        double s = 0.0;
        for (double v : r.row(i)) s += v;
        CHECK(std::abs(s - 1.0) <= 1e-12);
    }
}

TEST_CASE("activations") {
    CHECK(relu(-1.0) == 0.0);
    CHECK(relu(2.0) == 2.0);
    CHECK(gelu(0.0) == 0.0);
    // 0.5 * (1 + erf(1/sqrt 2)), evaluated in extended precision
    CHECK(gelu(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-15));
    CHECK(gelu(-1.0) == doctest::Approx(-0.15865525393145707).epsilon(1e-14));
    CHECK(gelu(1.0f) == doctest::Approx(0.8413447460685429).epsilon(1e-6));
    const TensorD a = activation(TensorD::vector({-1, 0, 2}), Activation::relu);
    CHECK(a == TensorD::vector({0, 0, 2}));
}

TEST_CASE("non-finite results are reported") {
    const double big = std::numeric_limits<double>::max();
    CHECK_THROWS_AS(add(TensorD::vector({big}), TensorD::vector({big})), NumericError);
    CHECK_THROWS_AS(scale(TensorD::vector({1.0}), std::numeric_limits<double>::infinity()), NumericError);
    CHECK_THROWS_AS(add(TensorD::vector({1, 2}), TensorD::vector({1})), ShapeError);
}
