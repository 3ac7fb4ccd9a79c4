// SPDX-License-Identifier: Apache-2.0

#include "lemon/policy.hpp"

#include <algorithm>

#include "lemon/error.hpp"

namespace lemon {

std::string policy_name(Policy policy) {
    switch (policy) {
        case Policy::lemon: return "lemon";
        case Policy::net2net_equal: return "net2net_equal";
        case Policy::zero_tail: return "zero_tail";
    }
    return "?";
}

Policy parse_policy(const std::string& name) {
    std::string norm = name;
    for (char& c : norm) {
        if (c == '-') {
            c = '_';
        }
    }
    for (Policy p : {Policy::lemon, Policy::net2net_equal, Policy::zero_tail}) {
        if (policy_name(p) == norm) {
            return p;
        }
    }
    throw PlanError("unknown policy '" + name + "'");
}

std::vector<double> policy_coefficients(Policy policy, std::size_t n) {
    if (n == 0) {
        throw PlanError("policy_coefficients: empty replica group");
    }
    std::vector<double> c(n, 0.0);
    const double nd = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (policy) {
            case Policy::lemon: c[i] = 2.0 * static_cast<double>(i + 1) / (nd * (nd + 1.0)); break;
            case Policy::net2net_equal: c[i] = 1.0 / nd; break;
            case Policy::zero_tail: c[i] = i == 0 ? 1.0 : 0.0; break;
        }
    }
    return c;
}

bool policy_is_random(Policy policy) { return policy != Policy::zero_tail; }

std::vector<std::vector<double>> split_fan_out(std::span<const double> v, std::size_t n,
                                               const SplitOptions& opts, Rng& rng) {
    if (n == 0) {
        throw PlanError("split_fan_out: empty replica group");
    }
    std::vector<std::vector<double>> parts(n, std::vector<double>(v.begin(), v.end()));
    if (n == 1) {
        return parts;
    }
    switch (opts.policy) {
        case Policy::net2net_equal: {
            const double nd = static_cast<double>(n);
            for (auto& part : parts) {
                for (double& x : part) {
                    x /= nd;
                }
            }
            return parts;
        }
        case Policy::zero_tail:
            for (std::size_t i = 1; i < n; ++i) {
                std::fill(parts[i].begin(), parts[i].end(), 0.0);
            }
            return parts;
        case Policy::lemon: {
            const auto coef = policy_coefficients(Policy::lemon, n);
            for (std::size_t j = 0; j < v.size(); ++j) {
                double used = 0.0;
                for (std::size_t i = 0; i + 1 < n; ++i) {
                    parts[i][j] = coef[i] * v[j] + rng.normal(0.0, opts.noise_scale);
                    used += parts[i][j];
                }
                parts[n - 1][j] = v[j] - used;
            }
            return parts;
        }
    }
    return parts;
}

}  // namespace lemon
