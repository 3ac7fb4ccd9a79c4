// SPDX-License-Identifier: Apache-2.0

#include "lemon/expansion.hpp"

#include <algorithm>
#include <cmath>

#include "lemon/kernels.hpp"

namespace lemon {

const char* vec_mode_name(VecMode mode) {
    switch (mode) {
        case VecMode::avg: return "avg";
        case VecMode::zero: return "zero";
        case VecMode::circ: return "circ";
        case VecMode::rand: return "rand";
    }
    return "?";
}

namespace {

void require_growth(std::size_t d_s, std::size_t d_t, const char* op) {
    if (d_t < d_s) {
        throw ShapeError(std::string(op) + ": target extent " + std::to_string(d_t) +
                         " is smaller than source extent " + std::to_string(d_s));
    }
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    return s / static_cast<double>(v.size());
}

}  // namespace

TensorD expand_vector(const TensorD& x, std::size_t d_t, VecMode mode, std::span<const double> zeta) {
    x.require_rank(1);
    const std::size_t d_s = x.dim(0);
    require_growth(d_s, d_t, "expand_vector");
    const std::size_t r = d_t % d_s;
    if (mode == VecMode::rand && zeta.size() != r) {
        throw ShapeError("expand_vector: zeta has length " + std::to_string(zeta.size()) +
                         ", tail length is " + std::to_string(r));
    }
    TensorD out({d_t});
    const std::size_t body = d_t - r;
    for (std::size_t i = 0; i < body; ++i) {
        out[i] = x[i % d_s];
    }
    const double avg = r > 0 && mode == VecMode::avg ? mean_of(x.data()) : 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        switch (mode) {
            case VecMode::avg: out[body + i] = avg; break;
            case VecMode::zero: out[body + i] = 0.0; break;
            case VecMode::circ: out[body + i] = x[i]; break;
            case VecMode::rand: out[body + i] = zeta[i]; break;
        }
    }
    return out;
}

TensorD invert_vector_expansion(const TensorD& xstar, std::size_t d_s) {
    xstar.require_rank(1);
    require_growth(d_s, xstar.dim(0), "invert_vector_expansion");
    return TensorD({d_s}, std::vector<double>(xstar.data().begin(), xstar.data().begin() + d_s));
}

TensorD expand_matrix_rows(const TensorD& m, std::size_t d_t, VecMode mode) {
    m.require_rank(2);
    if (mode == VecMode::rand) {
        throw PlanError("expand_matrix_rows: rand mode is not a row expansion");
    }
    const std::size_t d_s = m.rows();
    const std::size_t p = m.cols();
    require_growth(d_s, d_t, "expand_matrix_rows");
    const std::size_t r = d_t % d_s;
    const std::size_t body = d_t - r;
    TensorD out({d_t, p});
    for (std::size_t i = 0; i < body; ++i) {
        std::copy_n(m.row(i % d_s).begin(), p, out.row(i).begin());
    }
    if (r == 0) {
        return out;
    }
    std::vector<double> col_mean(p, 0.0);
    if (mode == VecMode::avg) {
        for (std::size_t j = 0; j < p; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < d_s; ++i) {
                s += m(i, j);
            }
            col_mean[j] = s / static_cast<double>(d_s);
        }
    }
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            out(body + i, j) = mode == VecMode::avg ? col_mean[j] : mode == VecMode::circ ? m(i, j) : 0.0;
        }
    }
    return out;
}

void check_column_split(const TensorD& m, std::size_t d_t, ColMode mode, const ColumnSplit& split) {
    m.require_rank(2);
    const std::size_t p = m.rows();
    const std::size_t d_s = m.cols();
    require_growth(d_s, d_t, "expand_matrix_cols");
    const std::size_t k = d_t / d_s;
    const std::size_t r = d_t % d_s;
    if (split.parts.size() != k) {
        throw ShapeError("column split has " + std::to_string(split.parts.size()) + " parts, expected " +
                         std::to_string(k));
    }
    for (const auto& part : split.parts) {
        if (part.shape() != m.shape()) {
            throw ShapeError("column split part has shape " + shape_string(part.shape()) + ", expected " +
                             shape_string(m.shape()));
        }
    }
    if (r == 0) {
        if (!split.tail.empty()) {
            throw ShapeError("column split has a tail but the widths divide");
        }
    } else if (split.tail.shape() != Shape{p, r}) {
        throw ShapeError("column split tail has shape " + shape_string(split.tail.shape()) +
                         ", expected " + shape_string({p, r}));
    }

    double magnitude = max_abs(m);
    for (const auto& part : split.parts) {
        magnitude = std::max(magnitude, max_abs(part));
    }
    if (mode == ColMode::circ && r > 0) {
        magnitude = std::max(magnitude, max_abs(split.tail));
    }
    const double tol = 1e-12 * magnitude;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < d_s; ++j) {
            double s = 0.0;
            for (const auto& part : split.parts) {
                s += part(i, j);
            }
            if (mode == ColMode::circ && j < r) {
                s += split.tail(i, j);
            }
            if (!(std::abs(s - m(i, j)) <= tol)) {
                throw PlanError("column split does not sum to the source matrix at (" + std::to_string(i) +
                                ", " + std::to_string(j) + "): " + std::to_string(s) + " vs " +
                                std::to_string(m(i, j)));
            }
        }
    }
}

TensorD expand_matrix_cols(const TensorD& m, std::size_t d_t, ColMode mode, const ColumnSplit& split) {
    check_column_split(m, d_t, mode, split);
    const std::size_t p = m.rows();
    const std::size_t d_s = m.cols();
    const std::size_t r = d_t % d_s;
    TensorD out({p, d_t});
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t b = 0; b < split.parts.size(); ++b) {
            for (std::size_t j = 0; j < d_s; ++j) {
                out(i, b * d_s + j) = split.parts[b](i, j);
            }
        }
        for (std::size_t j = 0; j < r; ++j) {
            out(i, d_t - r + j) = split.tail(i, j);
        }
    }
    return out;
}

TensorD expand_bias(const TensorD& b, std::size_t d_t, VecMode mode) {
    if (mode == VecMode::rand) {
        throw PlanError("expand_bias: rand mode needs an explicit tail, use expand_vector");
    }
    return expand_vector(b, d_t, mode);
}

double norm_eta(std::size_t d_s, std::size_t d_t) {
    require_growth(d_s, d_t, "norm_eta");
    return std::sqrt(static_cast<double>((d_t / d_s) * d_s) / static_cast<double>(d_t));
}

ExpandedNorm expand_layernorm(const TensorD& mu, const TensorD& beta, double eps, std::size_t d_t,
                              std::span<const double> zeta) {
    mu.require_rank(1);
    if (beta.shape() != mu.shape()) {
        throw ShapeError("expand_layernorm: beta shape differs from mu");
    }
    ExpandedNorm out = expand_rmsnorm(mu, eps, d_t, zeta);
    out.bias = expand_vector(beta, d_t, VecMode::zero);
    return out;
}

ExpandedNorm expand_rmsnorm(const TensorD& mu, double eps, std::size_t d_t, std::span<const double> zeta) {
    mu.require_rank(1);
    const double eta = norm_eta(mu.dim(0), d_t);
    ExpandedNorm out;
    out.weight = scale(expand_vector(mu, d_t, VecMode::rand, zeta), eta);
    out.eps = eta * eta * eps;
    return out;
}

}  // namespace lemon
