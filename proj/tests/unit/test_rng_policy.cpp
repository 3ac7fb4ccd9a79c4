// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "lemon/policy.hpp"
#include "lemon/error.hpp"
#include "lemon/rng.hpp"

using namespace lemon;

TEST_CASE("splitmix finalizer and fnv1a reference values") {
    // splitmix64 seeded with 0: first output is finalize(0x9E3779B97F4A7C15)
    CHECK(splitmix64_finalize(0x9E3779B97F4A7C15ULL) == 0xE220A8397B1DCDAFULL);
    CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
    CHECK(fnv1a64("a") == 0xAF63DC4C8601EC8CULL);
}

TEST_CASE("draws are a pure function of key and counter") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
    CHECK(a.counter() == 100);
    Rng c(42);
    CHECK(c.next_u64() == splitmix64_finalize(42 + 0x9E3779B97F4A7C15ULL));
    CHECK(Rng(43).next_u64() != Rng(42).next_u64());
}

TEST_CASE("substreams are independent of the parent position") {
    Rng r(7);
    const Rng s1 = r.substream("block", 3);
    r.next_u64();
    const Rng s2 = r.substream("block", 3);
    CHECK(s1.key() == s2.key());
    CHECK(r.substream("block", 4).key() != s1.key());
    CHECK(r.substream("mlp", 3).key() != s1.key());
    CHECK(r.counter() == 1);
}

TEST_CASE("uniform, normal and below stay in range with plausible moments") {
    Rng r(2024);
    double sum = 0.0, sq = 0.0, usum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        usum += u;
        const double z = r.normal(1.0, 2.0);
        REQUIRE(std::isfinite(z));
        sum += z;
        sq += (z - 1.0) * (z - 1.0);
    }
    CHECK(std::abs(usum / n - 0.5) < 0.005);
    CHECK(std::abs(sum / n - 1.0) < 0.03);
    CHECK(std::abs(sq / n - 4.0) < 0.08);

    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.below(7);
        REQUIRE(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    for (int i = 0; i < 100; ++i) {
        const double v = r.uniform(-1.0, 1.0);
        REQUIRE(v >= -1.0);
        REQUIRE(v < 1.0);
    }
}

TEST_CASE("policy names round-trip") {
    for (Policy p : {Policy::lemon, Policy::net2net_equal, Policy::zero_tail}) {
        CHECK(parse_policy(policy_name(p)) == p);
    }
    CHECK(parse_policy("net2net-equal") == Policy::net2net_equal);
    CHECK(parse_policy("zero-tail") == Policy::zero_tail);
    CHECK_THROWS_AS(parse_policy("equal"), PlanError);
}

TEST_CASE("policy coefficients") {
    const auto c = policy_coefficients(Policy::lemon, 3);
    REQUIRE(c.size() == 3);
    CHECK(c[0] == doctest::Approx(1.0 / 6.0));
    CHECK(c[1] == doctest::Approx(2.0 / 6.0));
    CHECK(c[2] == doctest::Approx(3.0 / 6.0));
    CHECK(policy_coefficients(Policy::net2net_equal, 4) == std::vector<double>(4, 0.25));
    CHECK(policy_coefficients(Policy::zero_tail, 3) == std::vector<double>{1, 0, 0});
    for (Policy p : {Policy::lemon, Policy::net2net_equal, Policy::zero_tail}) {
        CHECK(policy_coefficients(p, 1) == std::vector<double>{1});
    }
    CHECK(policy_is_random(Policy::lemon));
    CHECK(policy_is_random(Policy::net2net_equal));
    CHECK_FALSE(policy_is_random(Policy::zero_tail));
}

TEST_CASE("fan-out splits sum to the original vector") {
    const std::vector<double> v = {0.3, -1.2, 2.5, 0.0, 7.0};
    Rng rng(9);
    for (Policy p : {Policy::lemon, Policy::net2net_equal, Policy::zero_tail}) {
        for (std::size_t n = 1; n <= 4; ++n) {
            const auto parts = split_fan_out(v, n, SplitOptions{p, 0.02}, rng);
            REQUIRE(parts.size() == n);
            for (std::size_t j = 0; j < v.size(); ++j) {
                double s = 0.0;
                for (const auto& part : parts) s += part[j];
                CHECK(std::abs(s - v[j]) <= 1e-15 * 8);
            }
            if (n == 1) CHECK(parts[0] == v);
        }
    }
    const auto eq = split_fan_out(v, 3, SplitOptions{Policy::net2net_equal, 0.02}, rng);
    CHECK(eq[0] == eq[1]);
    CHECK(eq[1] == eq[2]);
    const auto zt = split_fan_out(v, 2, SplitOptions{Policy::zero_tail, 0.02}, rng);
    CHECK(zt[0] == v);
    CHECK(zt[1] == std::vector<double>(v.size(), 0.0));
    const auto lm = split_fan_out(v, 2, SplitOptions{Policy::lemon, 0.02}, rng);
    for (std::size_t j = 0; j < v.size(); ++j) CHECK(lm[0][j] != lm[1][j]);
}
