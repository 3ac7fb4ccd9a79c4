// SPDX-License-Identifier: Apache-2.0
//
// Dense reference kernels. These define the floating-point semantics of the
// whole library: every reduction runs left to right over increasing index,
// starting from +0, with no fused multiply-add. Outputs are checked for
// finiteness and a NumericError is thrown instead of propagating NaN/Inf.

#pragma once

#include <concepts>
#include <string_view>

#include "lemon/tensor.hpp"

namespace lemon {

enum class Activation { gelu, relu };

template <std::floating_point T>
void check_finite(const Tensor<T>& t, std::string_view op);

/// C[i,j] = sum_l A[i,l] * B[l,j].
template <std::floating_point T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// A * B^T, i.e. C[i,j] = sum_l A[i,l] * B[j,l]. Same accumulation order as matmul.
template <std::floating_point T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
Tensor<T> transpose(const Tensor<T>& m);

template <std::floating_point T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// Adds a length-D vector to every trailing vector of x.
template <std::floating_point T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias);

/// x W^T + b for a weight stored as [out x in].
template <std::floating_point T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Normalises each trailing vector with its population variance.
template <std::floating_point T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, T eps);

template <std::floating_point T>
Tensor<T> rmsnorm(const Tensor<T>& x, const Tensor<T>& weight, T eps);

/// Row-wise softmax with max subtraction.
template <std::floating_point T>
Tensor<T> softmax_rows(const Tensor<T>& m);

/// Exact erf-based GELU.
template <std::floating_point T>
T gelu(T x);

template <std::floating_point T>
T relu(T x) {
    return x > T{0} ? x : T{0};
}

template <std::floating_point T>
Tensor<T> activation(const Tensor<T>& x, Activation kind);

template <std::floating_point T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

template <std::floating_point T>
T max_abs(const Tensor<T>& a);

}  // namespace lemon
