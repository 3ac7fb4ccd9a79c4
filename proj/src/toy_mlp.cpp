// SPDX-License-Identifier: Apache-2.0

#include "lemon/toy_mlp.hpp"

#include <cmath>
#include <numbers>

#include "lemon/expansion.hpp"

namespace lemon {

double activation_derivative(double x, Activation kind) {
    if (kind == Activation::relu) {
        return x > 0.0 ? 1.0 : 0.0;
    }
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

namespace {

TensorD pre_activation(const ToyMlp& m, const TensorD& x) {
    return matmul(m.w1, x.reshaped({x.numel(), 1})).reshaped({m.w1.rows()});
}

}  // namespace

double toy_forward(const ToyMlp& m, const TensorD& x) {
    const TensorD a = activation(pre_activation(m, x), m.act);
    double f = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        f += m.v[i] * a[i];
    }
    return f;
}

ToyMlp toy_sgd_step(const ToyMlp& m, const TensorD& x, double y, double lr) {
    const TensorD h = pre_activation(m, x);
    const TensorD a = activation(h, m.act);
    double f = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        f += m.v[i] * a[i];
    }
    const double g = f - y;
    ToyMlp out = m;
    for (std::size_t i = 0; i < m.w1.rows(); ++i) {
        const double back = g * m.v[i] * activation_derivative(h[i], m.act);
        for (std::size_t j = 0; j < m.w1.cols(); ++j) {
            out.w1(i, j) -= lr * back * x[j];
        }
        out.v[i] -= lr * g * a[i];
    }
    return out;
}

ToyMlp expand_toy_mlp(const ToyMlp& m, std::size_t hidden_t, const SplitOptions& opts, Rng& rng) {
    const std::size_t hidden_s = m.w1.rows();
    ToyMlp out;
    out.act = m.act;
    out.w1 = expand_matrix_rows(m.w1, hidden_t, VecMode::circ);
    // v as a [1 x hidden] fan-out matrix, split like any column-circular layer.
    const TensorD v_row = m.v.reshaped({1, hidden_s});
    ColumnSplit split;
    const std::size_t k = hidden_t / hidden_s;
    const std::size_t r = hidden_t % hidden_s;
    split.parts.assign(k, TensorD({1, hidden_s}));
    if (r > 0) {
        split.tail = TensorD({1, r});
    }
    for (std::size_t z = 0; z < hidden_s; ++z) {
        const std::size_t n = k + (z < r ? 1 : 0);
        const double vz = m.v[z];
        const auto parts = split_fan_out(std::span<const double>(&vz, 1), n, opts, rng);
        for (std::size_t b = 0; b < k; ++b) {
            split.parts[b](0, z) = parts[b][0];
        }
        if (z < r) {
            split.tail(0, z) = parts[k][0];
        }
    }
    out.v = expand_matrix_cols(v_row, hidden_t, ColMode::circ, split).reshaped({hidden_t});
    return out;
}

std::vector<std::vector<std::size_t>> toy_duplicate_groups(std::size_t hidden_s, std::size_t hidden_t) {
    std::vector<std::vector<std::size_t>> groups;
    for (std::size_t z = 0; z < hidden_s; ++z) {
        std::vector<std::size_t> g;
        for (std::size_t j = z; j < hidden_t; j += hidden_s) {
            g.push_back(j);
        }
        if (g.size() > 1) {
            groups.push_back(std::move(g));
        }
    }
    return groups;
}

}  // namespace lemon
