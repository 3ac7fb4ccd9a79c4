// SPDX-License-Identifier: Apache-2.0
//
// Inference-mode bottleneck block:
//   y = relu(x + BN3(conv3(relu(BN2(conv2(relu(BN1(conv1(x)))))))))
// conv1 and conv3 are 1x1, conv2 is 3x3 with padding 1. Tensors are NCHW.

#pragma once

#include <cstddef>

#include "lemon/policy.hpp"
#include "lemon/rng.hpp"
#include "lemon/tensor.hpp"

namespace lemon {

struct Conv2d {
    TensorD weight;  // [out, in, kh, kw]
    TensorD bias;    // [out]
    std::size_t padding = 0;
};

struct BatchNorm {
    TensorD gamma, beta, mean, var;  // [C] each
    double eps = 1e-5;
};

struct Bottleneck {
    Conv2d conv1;
    BatchNorm bn1;
    Conv2d conv2;
    BatchNorm bn2;
    Conv2d conv3;
    BatchNorm bn3;

    std::size_t channels() const { return conv1.weight.dim(1); }
    std::size_t inner() const { return conv1.weight.dim(0); }
};

TensorD conv2d(const TensorD& x, const Conv2d& conv);
TensorD batchnorm(const TensorD& x, const BatchNorm& bn);
TensorD bottleneck_forward(const TensorD& x, const Bottleneck& block);

/// Random block with `channels` outer and `inner` bottleneck channels.
Bottleneck random_bottleneck(std::size_t channels, std::size_t inner, Rng& rng);

/// Widens the inner channels to d_t. conv1 output channels (and BN1) repeat
/// circularly; conv2 output channels repeat circularly and, for every output
/// channel, the kernels of input channel k are split among the copies of k;
/// conv3 input channels are split the same way. BN3 is unchanged.
Bottleneck expand_cnn_bottleneck(const Bottleneck& block, std::size_t d_t, const SplitOptions& opts, Rng& rng);

}  // namespace lemon
