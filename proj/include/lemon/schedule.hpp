// SPDX-License-Identifier: Apache-2.0
//
// Cosine learning-rate schedule with linear warmup. Expanded models keep the
// source eta_max and use a shorter T_total, which makes the decay faster.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace lemon {

struct ScheduleSpec {
    double eta_max = 1e-3;
    double eta_min = 0.0;
    std::size_t t_warm = 0;
    std::size_t T_total = 1;

    /// Throws PlanError unless 0 <= eta_min <= eta_max and t_warm < T_total.
    void validate() const;
};

/// t < t_warm: eta_max * (t+1) / t_warm.
/// otherwise: w * eta_max + (1 - w) * eta_min, w = (1 + cos(pi (t - t_warm) / (T_total - t_warm))) / 2,
/// which equals eta_max at t_warm and eta_min at T_total exactly.
double cosine_schedule(const ScheduleSpec& spec, std::size_t t);

/// Learning rates for t = 0 .. T_total inclusive.
std::vector<double> schedule_values(const ScheduleSpec& spec);

/// CSV with header "step,lr" and one row per step, lr printed with 17 significant digits.
void write_schedule_csv(const ScheduleSpec& spec, std::ostream& os);

/// Named presets: vit, lemon-vit, bert, lemon-bert-384, lemon-bert-512.
ScheduleSpec schedule_preset(const std::string& name);
std::vector<std::string> schedule_preset_names();

}  // namespace lemon
