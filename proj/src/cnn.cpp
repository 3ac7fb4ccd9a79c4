// SPDX-License-Identifier: Apache-2.0

#include "lemon/cnn.hpp"

#include <cmath>

#include "lemon/kernels.hpp"

namespace lemon {

TensorD conv2d(const TensorD& x, const Conv2d& conv) {
    x.require_rank(4);
    conv.weight.require_rank(4);
    const std::size_t n = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
    const std::size_t c_out = conv.weight.dim(0), kh = conv.weight.dim(2), kw = conv.weight.dim(3);
    if (conv.weight.dim(1) != c_in) {
        throw ShapeError("conv2d: input has " + std::to_string(c_in) + " channels, kernel expects " +
                         std::to_string(conv.weight.dim(1)));
    }
    if (conv.bias.shape() != Shape{c_out}) {
        throw ShapeError("conv2d: bias must have one entry per output channel");
    }
    const std::size_t pad = conv.padding;
    if (h + 2 * pad < kh || w + 2 * pad < kw) {
        throw ShapeError("conv2d: kernel larger than padded input");
    }
    const std::size_t oh = h + 2 * pad - kh + 1, ow = w + 2 * pad - kw + 1;
    TensorD y({n, c_out, oh, ow});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < c_out; ++o) {
            for (std::size_t i = 0; i < oh; ++i) {
                for (std::size_t j = 0; j < ow; ++j) {
                    double s = 0.0;
                    for (std::size_t c = 0; c < c_in; ++c) {
                        for (std::size_t u = 0; u < kh; ++u) {
                            const std::size_t yy = i + u;
                            if (yy < pad || yy - pad >= h) {
                                continue;
                            }
                            for (std::size_t v = 0; v < kw; ++v) {
                                const std::size_t xx = j + v;
                                if (xx < pad || xx - pad >= w) {
                                    continue;
                                }
                                s += x(b, c, yy - pad, xx - pad) * conv.weight(o, c, u, v);
                            }
                        }
                    }
                    y(b, o, i, j) = s + conv.bias[o];
                }
            }
        }
    }
    check_finite(y, "conv2d");
    return y;
}

TensorD batchnorm(const TensorD& x, const BatchNorm& bn) {
    x.require_rank(4);
    const std::size_t c = x.dim(1);
    for (const TensorD* t : {&bn.gamma, &bn.beta, &bn.mean, &bn.var}) {
        if (t->shape() != Shape{c}) {
            throw ShapeError("batchnorm: parameter shape " + shape_string(t->shape()) + " for " +
                             std::to_string(c) + " channels");
        }
    }
    TensorD y = x;
    for (std::size_t b = 0; b < x.dim(0); ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double denom = std::sqrt(bn.var[ch] + bn.eps);
            if (!(denom > 0.0)) {
                throw NumericError("batchnorm: running variance plus eps is zero");
            }
            for (std::size_t i = 0; i < x.dim(2); ++i) {
                for (std::size_t j = 0; j < x.dim(3); ++j) {
                    y(b, ch, i, j) = (x(b, ch, i, j) - bn.mean[ch]) / denom * bn.gamma[ch] + bn.beta[ch];
                }
            }
        }
    }
    check_finite(y, "batchnorm");
    return y;
}

namespace {

TensorD relu_all(const TensorD& x) { return activation(x, Activation::relu); }

Conv2d random_conv(std::size_t out, std::size_t in, std::size_t k, std::size_t pad, Rng& rng) {
    Conv2d c;
    c.weight = TensorD({out, in, k, k});
    const double std = 1.0 / std::sqrt(static_cast<double>(in * k * k));
    for (double& v : c.weight.data()) {
        v = rng.normal(0.0, std);
    }
    c.bias = TensorD({out});
    for (double& v : c.bias.data()) {
        v = rng.normal(0.0, 0.1);
    }
    c.padding = pad;
    return c;
}

BatchNorm random_bn(std::size_t c, Rng& rng) {
    BatchNorm bn;
    bn.gamma = TensorD({c});
    bn.beta = TensorD({c});
    bn.mean = TensorD({c});
    bn.var = TensorD({c});
    for (std::size_t i = 0; i < c; ++i) {
        bn.gamma[i] = rng.uniform(0.5, 1.5);
        bn.beta[i] = rng.normal(0.0, 0.1);
        bn.mean[i] = rng.normal(0.0, 0.1);
        bn.var[i] = rng.uniform(0.5, 1.5);
    }
    return bn;
}

TensorD tile_channels(const TensorD& v, std::size_t d_t) {
    TensorD out({d_t});
    for (std::size_t i = 0; i < d_t; ++i) {
        out[i] = v[i % v.dim(0)];
    }
    return out;
}

BatchNorm tile_bn(const BatchNorm& bn, std::size_t d_t) {
    return BatchNorm{tile_channels(bn.gamma, d_t), tile_channels(bn.beta, d_t), tile_channels(bn.mean, d_t),
                     tile_channels(bn.var, d_t), bn.eps};
}

/// New input-channel axis of size d_t: for every output channel o, the kernel
/// slice of source channel c is split among target channels {c, c+D_S, ...}.
TensorD split_input_channels(const TensorD& w, std::size_t d_t, const SplitOptions& opts, Rng& rng) {
    const std::size_t out = w.dim(0), d_s = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    TensorD res({out, d_t, kh, kw});
    std::vector<double> slice(kh * kw);
    for (std::size_t o = 0; o < out; ++o) {
        for (std::size_t c = 0; c < d_s; ++c) {
            for (std::size_t u = 0; u < kh; ++u) {
                for (std::size_t v = 0; v < kw; ++v) {
                    slice[u * kw + v] = w(o, c, u, v);
                }
            }
            const std::size_t n = d_t / d_s + (c < d_t % d_s ? 1 : 0);
            const auto parts = split_fan_out(slice, n, opts, rng);
            for (std::size_t m = 0; m < n; ++m) {
                for (std::size_t u = 0; u < kh; ++u) {
                    for (std::size_t v = 0; v < kw; ++v) {
                        res(o, c + m * d_s, u, v) = parts[m][u * kw + v];
                    }
                }
            }
        }
    }
    return res;
}

/// Output channel i of the result copies output channel i mod D_S.
Conv2d tile_output_channels(const Conv2d& conv, std::size_t d_t) {
    const std::size_t d_s = conv.weight.dim(0), in = conv.weight.dim(1), kh = conv.weight.dim(2),
                      kw = conv.weight.dim(3);
    Conv2d out;
    out.weight = TensorD({d_t, in, kh, kw});
    for (std::size_t o = 0; o < d_t; ++o) {
        for (std::size_t c = 0; c < in; ++c) {
            for (std::size_t u = 0; u < kh; ++u) {
                for (std::size_t v = 0; v < kw; ++v) {
                    out.weight(o, c, u, v) = conv.weight(o % d_s, c, u, v);
                }
            }
        }
    }
    out.bias = tile_channels(conv.bias, d_t);
    out.padding = conv.padding;
    return out;
}

}  // namespace

TensorD bottleneck_forward(const TensorD& x, const Bottleneck& block) {
    TensorD h = relu_all(batchnorm(conv2d(x, block.conv1), block.bn1));
    h = relu_all(batchnorm(conv2d(h, block.conv2), block.bn2));
    h = batchnorm(conv2d(h, block.conv3), block.bn3);
    return relu_all(add(x, h));
}

Bottleneck random_bottleneck(std::size_t channels, std::size_t inner, Rng& rng) {
    Bottleneck b;
    b.conv1 = random_conv(inner, channels, 1, 0, rng);
    b.bn1 = random_bn(inner, rng);
    b.conv2 = random_conv(inner, inner, 3, 1, rng);
    b.bn2 = random_bn(inner, rng);
    b.conv3 = random_conv(channels, inner, 1, 0, rng);
    b.bn3 = random_bn(channels, rng);
    return b;
}

Bottleneck expand_cnn_bottleneck(const Bottleneck& block, std::size_t d_t, const SplitOptions& opts, Rng& rng) {
    const std::size_t d_s = block.inner();
    if (d_t < d_s) {
        throw PlanError("expand_cnn_bottleneck: target channels " + std::to_string(d_t) + " below " +
                         std::to_string(d_s));
    }
    Rng r2 = rng.substream("conv2");
    Rng r3 = rng.substream("conv3");
    Bottleneck out;
    out.conv1 = tile_output_channels(block.conv1, d_t);
    out.bn1 = tile_bn(block.bn1, d_t);

    Conv2d c2 = tile_output_channels(block.conv2, d_t);
    c2.weight = split_input_channels(c2.weight, d_t, opts, r2);
    out.conv2 = std::move(c2);
    out.bn2 = tile_bn(block.bn2, d_t);

    out.conv3 = block.conv3;
    out.conv3.weight = split_input_channels(block.conv3.weight, d_t, opts, r3);
    out.bn3 = block.bn3;
    return out;
}

}  // namespace lemon
