// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "lemon/error.hpp"
#include "lemon/schedule.hpp"

using namespace lemon;

namespace {

double closed_form(const ScheduleSpec& s, std::size_t t) {
    if (t < s.t_warm) return s.eta_max * static_cast<double>(t + 1) / static_cast<double>(s.t_warm);
    const double frac = static_cast<double>(t - s.t_warm) / static_cast<double>(s.T_total - s.t_warm);
    return s.eta_min + 0.5 * (s.eta_max - s.eta_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace

TEST_CASE("endpoints and midpoint") {
    const ScheduleSpec s{1.0, 0.0, 0, 100};
    CHECK(cosine_schedule(s, 0) == 1.0);
    CHECK(cosine_schedule(s, 100) == 0.0);
    CHECK(cosine_schedule(s, 50) == doctest::Approx(0.5).epsilon(1e-15));

    const ScheduleSpec w{2e-3, 1e-5, 10, 110};
    CHECK(cosine_schedule(w, 0) == 2e-4);
    CHECK(cosine_schedule(w, 9) == 2e-3);
    CHECK(cosine_schedule(w, 10) == 2e-3);
    CHECK(cosine_schedule(w, 110) == 1e-5);
}

TEST_CASE("agrees with the closed form on every preset") {
    for (const auto& name : schedule_preset_names()) {
        CAPTURE(name);
        const ScheduleSpec s = schedule_preset(name);
        const auto v = schedule_values(s);
        REQUIRE(v.size() == s.T_total + 1);
        for (std::size_t t = 0; t <= s.T_total; ++t) {
            const double want = closed_form(s, t);
            REQUIRE(std::abs(v[t] - want) <= 1e-15 * std::abs(want));
        }
        CHECK(v[s.t_warm] == s.eta_max);
        CHECK(v[s.T_total] == s.eta_min);
    }
}

TEST_CASE("warmup rises and the cosine falls") {
    const ScheduleSpec s = schedule_preset("vit");
    const auto v = schedule_values(s);
    for (std::size_t t = 1; t < s.t_warm; ++t) CHECK(v[t] > v[t - 1]);
    CHECK(v[s.t_warm - 1] == v[s.t_warm]);
    for (std::size_t t = s.t_warm + 1; t <= s.T_total; ++t) REQUIRE(v[t] <= v[t - 1]);
}

TEST_CASE("shorter horizon decays faster from the same peak") {
    const auto base = schedule_values(schedule_preset("vit"));
    const auto fast = schedule_values(schedule_preset("lemon-vit"));
    for (std::size_t t = 6; t < fast.size(); ++t) REQUIRE(fast[t] < base[t]);
    const auto bert = schedule_values(schedule_preset("bert"));
    for (const char* name : {"lemon-bert-384", "lemon-bert-512"}) {
        const auto v = schedule_values(schedule_preset(name));
        CHECK(v[5000] == bert[5000]);
        for (std::size_t t = 5001; t < v.size(); t += 997) REQUIRE(v[t] < bert[t]);
    }
}

TEST_CASE("presets") {
    const ScheduleSpec vit = schedule_preset("vit");
    CHECK(vit.eta_max == 1e-3);
    CHECK(vit.eta_min == 1e-5);
    CHECK(vit.t_warm == 5);
    CHECK(vit.T_total == 300);
    CHECK(schedule_preset("lemon-vit").T_total == 130);
    const ScheduleSpec bert = schedule_preset("bert");
    CHECK(bert.eta_max == 2e-4);
    CHECK(bert.eta_min == 2e-5);
    CHECK(bert.t_warm == 5000);
    CHECK(bert.T_total == 220000);
    CHECK(schedule_preset("lemon-bert-384").T_total == 165000);
    CHECK(schedule_preset("lemon-bert-512").T_total == 132000);
    CHECK(schedule_preset("lemon-bert-512").eta_max == 2e-4);
    CHECK_THROWS_AS(schedule_preset("gpt"), PlanError);
}

TEST_CASE("invalid schedules are rejected") {
    CHECK_THROWS_AS(ScheduleSpec({1e-3, 1e-2, 0, 10}).validate(), PlanError);
    CHECK_THROWS_AS(ScheduleSpec({1e-3, -1.0, 0, 10}).validate(), PlanError);
    CHECK_THROWS_AS(ScheduleSpec({1e-3, 0.0, 10, 10}).validate(), PlanError);
    CHECK_NOTHROW(ScheduleSpec({1e-3, 1e-3, 0, 1}).validate());
}

TEST_CASE("csv output") {
    std::ostringstream os;
    write_schedule_csv(ScheduleSpec{1e-3, 1e-5, 2, 4}, os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,lr");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        CHECK(std::stoul(line.substr(0, comma)) == rows);
        CHECK(std::stod(line.substr(comma + 1)) == cosine_schedule(ScheduleSpec{1e-3, 1e-5, 2, 4}, rows));
        ++rows;
    }
    CHECK(rows == 5);
}
