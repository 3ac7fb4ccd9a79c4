// SPDX-License-Identifier: Apache-2.0
//
// Loop oracles for the operator algebra and the convolutional block.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lemon/cnn.hpp"
#include "lemon/expansion.hpp"
#include "test_support.hpp"

namespace lemon::testing::oracle {

/// Vector expansion written from the mode definitions, rand tail taken from zeta.
inline std::vector<double> expand_with(const std::vector<double>& x, std::size_t d_t, VecMode mode,
                                       const std::vector<double>& zeta) {
    if (mode != VecMode::rand) return expand(x, d_t, mode);
    std::vector<double> out = expand(x, d_t, VecMode::zero);
    const std::size_t body = d_t - d_t % x.size();
    for (std::size_t i = body; i < d_t; ++i) out[i] = zeta[i - body];
    return out;
}

inline std::vector<double> matvec(const TensorD& m, const std::vector<double>& x) {
    std::vector<double> y(m.rows(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) y[i] += m(i, j) * x[j];
    return y;
}

inline double gap(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// Random split of m satisfying the column constraint for `mode`.
inline ColumnSplit random_split(const TensorD& m, std::size_t d_t, ColMode mode, Gen& g) {
    const std::size_t p = m.rows(), d_s = m.cols(), k = d_t / d_s, r = d_t % d_s;
    ColumnSplit s;
    if (r > 0) s.tail = random_tensor({p, r}, g);
    TensorD rest = m;
    if (mode == ColMode::circ) {
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < r; ++j) rest(i, j) -= s.tail(i, j);
    }
    for (std::size_t b = 0; b + 1 < k; ++b) {
        TensorD part = random_tensor(m.shape(), g);
        for (std::size_t i = 0; i < m.numel(); ++i) rest[i] -= part[i];
        s.parts.push_back(part);
    }
    s.parts.push_back(rest);
    return s;
}

// ---- convolutional block, direct loops over [n, c, h, w] ----

inline TensorD conv(const TensorD& x, const Conv2d& c) {
    const std::size_t n = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t cout = c.weight.dim(0), k = c.weight.dim(2);
    const long pad = static_cast<long>(c.padding);
    const std::size_t oh = h + 2 * c.padding - k + 1, ow = w + 2 * c.padding - k + 1;
    TensorD y({n, cout, oh, ow});
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t o = 0; o < cout; ++o)
            for (std::size_t i = 0; i < oh; ++i)
                for (std::size_t j = 0; j < ow; ++j) {
                    double s = c.bias[o];
                    for (std::size_t ci = 0; ci < cin; ++ci)
                        for (std::size_t u = 0; u < k; ++u)
                            for (std::size_t v = 0; v < k; ++v) {
                                const long yy = static_cast<long>(i + u) - pad, xx = static_cast<long>(j + v) - pad;
                                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
                                s += x(b, ci, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) *
                                     c.weight(o, ci, u, v);
                            }
                    y(b, o, i, j) = s;
                }
    return y;
}

inline TensorD bn(const TensorD& x, const BatchNorm& p, bool relu) {
    TensorD y = x;
    for (std::size_t b = 0; b < x.dim(0); ++b)
        for (std::size_t c = 0; c < x.dim(1); ++c)
            for (std::size_t i = 0; i < x.dim(2); ++i)
                for (std::size_t j = 0; j < x.dim(3); ++j) {
                    const double v = (x(b, c, i, j) - p.mean[c]) / std::sqrt(p.var[c] + p.eps) * p.gamma[c] + p.beta[c];
                    y(b, c, i, j) = relu ? std::max(v, 0.0) : v;
                }
    return y;
}

inline TensorD bottleneck(const TensorD& x, const Bottleneck& blk) {
    TensorD h = bn(conv(x, blk.conv1), blk.bn1, true);
    h = bn(conv(h, blk.conv2), blk.bn2, true);
    h = bn(conv(h, blk.conv3), blk.bn3, false);
    for (std::size_t i = 0; i < h.data().size(); ++i) h.data()[i] = std::max(h.data()[i] + x.data()[i], 0.0);
    return h;
}

}  // namespace lemon::testing::oracle
