// SPDX-License-Identifier: Apache-2.0

#include "lemon/schedule.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "lemon/error.hpp"

namespace lemon {

void ScheduleSpec::validate() const {
    if (!std::isfinite(eta_max) || !std::isfinite(eta_min) || !(eta_min >= 0.0) || !(eta_min <= eta_max)) {
        throw PlanError("schedule needs 0 <= eta_min <= eta_max");
    }
    if (!(t_warm < T_total)) {
        throw PlanError("schedule needs t_warm < T_total");
    }
}

double cosine_schedule(const ScheduleSpec& spec, std::size_t t) {
    spec.validate();
    if (t > spec.T_total) {
        throw PlanError("step " + std::to_string(t) + " beyond T_total " + std::to_string(spec.T_total));
    }
    if (t < spec.t_warm) {
        return spec.eta_max * (static_cast<double>(t + 1) / static_cast<double>(spec.t_warm));
    }
    const double progress =
        static_cast<double>(t - spec.t_warm) / static_cast<double>(spec.T_total - spec.t_warm);
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
    return w * spec.eta_max + (1.0 - w) * spec.eta_min;
}

std::vector<double> schedule_values(const ScheduleSpec& spec) {
    spec.validate();
    std::vector<double> lr(spec.T_total + 1);
    for (std::size_t t = 0; t <= spec.T_total; ++t) {
        lr[t] = cosine_schedule(spec, t);
    }
    return lr;
}

void write_schedule_csv(const ScheduleSpec& spec, std::ostream& os) {
    const auto lr = schedule_values(spec);
    os << "step,lr\n";
    char buf[64];
    for (std::size_t t = 0; t < lr.size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", t, lr[t]);
        os << buf;
    }
}

ScheduleSpec schedule_preset(const std::string& name) {
    if (name == "vit") {
        return {1e-3, 1e-5, 5, 300};
    }
    if (name == "lemon-vit") {
        return {1e-3, 1e-5, 5, 130};
    }
    if (name == "bert") {
        return {2e-4, 2e-5, 5000, 220000};
    }
    if (name == "lemon-bert-384") {
        return {2e-4, 2e-5, 5000, 165000};
    }
    if (name == "lemon-bert-512") {
        return {2e-4, 2e-5, 5000, 132000};
    }
    throw PlanError("unknown schedule preset '" + name + "'");
}

std::vector<std::string> schedule_preset_names() {
    return {"vit", "lemon-vit", "bert", "lemon-bert-384", "lemon-bert-512"};
}

}  // namespace lemon
