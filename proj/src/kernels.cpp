// SPDX-License-Identifier: Apache-2.0
//
// Reference kernel implementations, instantiated for float and double.

#include "lemon/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lemon {

std::string dtype_name(DType dtype) { return dtype == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(const std::string& name) {
    if (name == "f32" || name == "float32") {
        return DType::f32;
    }
    if (name == "f64" || name == "float64") {
        return DType::f64;
    }
    throw PlanError("unknown dtype '" + name + "'");
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

template <std::floating_point T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, std::string_view op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
    }
}

template <std::floating_point T>
std::size_t trailing_extent(const Tensor<T>& x, std::string_view op) {
    if (x.rank() == 0) {
        throw ShapeError(std::string(op) + ": empty tensor");
    }
    return x.shape().back();
}

template <std::floating_point T>
void require_vector(const Tensor<T>& v, std::size_t n, std::string_view op, std::string_view what) {
    if (v.rank() != 1 || v.dim(0) != n) {
        throw ShapeError(std::string(op) + ": " + std::string(what) + " must have shape [" +
                         std::to_string(n) + "], got " + shape_string(v.shape()));
    }
}

}  // namespace

template <std::floating_point T>
void check_finite(const Tensor<T>& t, std::string_view op) {
    for (T v : t.data()) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + ": non-finite value in output");
        }
    }
}

template <std::floating_point T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    a.require_rank(2);
    b.require_rank(2);
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner extents differ " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
    }
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    const std::size_t n = b.cols();
    Tensor<T> c({m, n});
    // i-l-j order: each C[i,j] still accumulates over l = 0..k-1 in sequence.
    for (std::size_t i = 0; i < m; ++i) {
        T* out = &c(i, 0);
        for (std::size_t l = 0; l < k; ++l) {
            const T s = a(i, l);
            const T* brow = &b(l, 0);
            for (std::size_t j = 0; j < n; ++j) {
                out[j] += s * brow[j];
            }
        }
    }
    check_finite(c, "matmul");
    return c;
}

template <std::floating_point T>
Tensor<T> transpose(const Tensor<T>& m) {
    Tensor<T> t({m.cols(), m.rows()});
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            t(j, i) = m(i, j);
        }
    }
    return t;
}

template <std::floating_point T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
    b.require_rank(2);
    if (a.rank() == 2 && a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: inner extents differ " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()) + "^T");
    }
    return matmul(a, transpose(b));
}

template <std::floating_point T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "add");
    Tensor<T> c = a;
    for (std::size_t i = 0; i < c.numel(); ++i) {
        c[i] += b[i];
    }
    check_finite(c, "add");
    return c;
}

template <std::floating_point T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "subtract");
    Tensor<T> c = a;
    for (std::size_t i = 0; i < c.numel(); ++i) {
        c[i] -= b[i];
    }
    check_finite(c, "subtract");
    return c;
}

template <std::floating_point T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    Tensor<T> c = a;
    for (T& v : c.data()) {
        v *= factor;
    }
    check_finite(c, "scale");
    return c;
}

template <std::floating_point T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
    const std::size_t d = trailing_extent(x, "add_bias");
    require_vector(bias, d, "add_bias", "bias");
    Tensor<T> y = x;
    auto data = y.data();
    for (std::size_t off = 0; off < data.size(); off += d) {
        for (std::size_t j = 0; j < d; ++j) {
            data[off + j] += bias[j];
        }
    }
    check_finite(y, "add_bias");
    return y;
}

template <std::floating_point T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
    weight.require_rank(2);
    if (x.rank() != 2 || x.cols() != weight.cols()) {
        throw ShapeError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                         shape_string(weight.shape()));
    }
    return add_bias(matmul_nt(x, weight), bias);
}

template <std::floating_point T>
Tensor<T> layernorm(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, T eps) {
    const std::size_t d = trailing_extent(x, "layernorm");
    require_vector(weight, d, "layernorm", "weight");
    require_vector(bias, d, "layernorm", "bias");
    if (eps < T{0}) {
        throw NumericError("layernorm: eps must be non-negative");
    }
    Tensor<T> y(x.shape());
    auto in = x.data();
    auto out = y.data();
    for (std::size_t off = 0; off < in.size(); off += d) {
        T sum{0};
        for (std::size_t j = 0; j < d; ++j) {
            sum += in[off + j];
        }
        const T mean = sum / static_cast<T>(d);
        T sq{0};
        for (std::size_t j = 0; j < d; ++j) {
            const T c = in[off + j] - mean;
            sq += c * c;
        }
        const T denom_sq = sq / static_cast<T>(d) + eps;
        if (!(denom_sq > T{0})) {
            throw NumericError("layernorm: variance plus eps is zero");
        }
        const T denom = std::sqrt(denom_sq);
        for (std::size_t j = 0; j < d; ++j) {
            out[off + j] = (in[off + j] - mean) / denom * weight[j] + bias[j];
        }
    }
    check_finite(y, "layernorm");
    return y;
}

template <std::floating_point T>
Tensor<T> rmsnorm(const Tensor<T>& x, const Tensor<T>& weight, T eps) {
    const std::size_t d = trailing_extent(x, "rmsnorm");
    require_vector(weight, d, "rmsnorm", "weight");
    if (eps < T{0}) {
        throw NumericError("rmsnorm: eps must be non-negative");
    }
    Tensor<T> y(x.shape());
    auto in = x.data();
    auto out = y.data();
    for (std::size_t off = 0; off < in.size(); off += d) {
        T sq{0};
        for (std::size_t j = 0; j < d; ++j) {
            sq += in[off + j] * in[off + j];
        }
        const T denom_sq = sq / static_cast<T>(d) + eps;
        if (!(denom_sq > T{0})) {
            throw NumericError("rmsnorm: mean square plus eps is zero");
        }
        const T denom = std::sqrt(denom_sq);
        for (std::size_t j = 0; j < d; ++j) {
            out[off + j] = in[off + j] / denom * weight[j];
        }
    }
    check_finite(y, "rmsnorm");
    return y;
}

template <std::floating_point T>
Tensor<T> softmax_rows(const Tensor<T>& m) {
    m.require_rank(2);
    Tensor<T> y(m.shape());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto in = m.row(i);
        auto out = y.row(i);
        const T hi = *std::max_element(in.begin(), in.end());
        T sum{0};
        for (std::size_t j = 0; j < in.size(); ++j) {
            out[j] = std::exp(in[j] - hi);
            sum += out[j];
        }
        for (T& v : out) {
            v /= sum;
        }
    }
    check_finite(y, "softmax_rows");
    return y;
}

template <std::floating_point T>
T gelu(T x) {
    return T{0.5} * x * (T{1} + std::erf(x / std::sqrt(T{2})));
}

template <std::floating_point T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
    Tensor<T> y = x;
    for (T& v : y.data()) {
        v = kind == Activation::gelu ? gelu(v) : relu(v);
    }
    check_finite(y, "activation");
    return y;
}

template <std::floating_point T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "max_abs_diff");
    T worst{0};
    for (std::size_t i = 0; i < a.numel(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
    }
    return worst;
}

template <std::floating_point T>
T max_abs(const Tensor<T>& a) {
    T worst{0};
    for (T v : a.data()) {
        worst = std::max(worst, std::abs(v));
    }
    return worst;
}

#define LEMON_INSTANTIATE_KERNELS(T)                                                          \
    template void check_finite<T>(const Tensor<T>&, std::string_view);                       \
    template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                        \
    template Tensor<T> matmul_nt<T>(const Tensor<T>&, const Tensor<T>&);                     \
    template Tensor<T> transpose<T>(const Tensor<T>&);                                       \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                           \
    template Tensor<T> subtract<T>(const Tensor<T>&, const Tensor<T>&);                      \
    template Tensor<T> scale<T>(const Tensor<T>&, T);                                        \
    template Tensor<T> add_bias<T>(const Tensor<T>&, const Tensor<T>&);                      \
    template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);      \
    template Tensor<T> layernorm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
    template Tensor<T> rmsnorm<T>(const Tensor<T>&, const Tensor<T>&, T);                    \
    template Tensor<T> softmax_rows<T>(const Tensor<T>&);                                    \
    template T gelu<T>(T);                                                                   \
    template Tensor<T> activation<T>(const Tensor<T>&, Activation);                          \
    template T max_abs_diff<T>(const Tensor<T>&, const Tensor<T>&);                          \
    template T max_abs<T>(const Tensor<T>&);

LEMON_INSTANTIATE_KERNELS(float)
LEMON_INSTANTIATE_KERNELS(double)

#undef LEMON_INSTANTIATE_KERNELS

}  // namespace lemon
