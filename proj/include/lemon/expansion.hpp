// SPDX-License-Identifier: Apache-2.0
//
// Lossless expansion algebra. An operator expansion is (V_in, V_out)-lossless
// when feeding it a V_in-expanded input yields the V_out-expansion of the
// original output. All operators here are deterministic; any randomness (tail
// values, split parts) is passed in by the caller.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lemon/tensor.hpp"

namespace lemon {

/// Tail fill after floor(D_T/D_S) copies of x: mean, zeros, leading entries, or zeta.
enum class VecMode { avg, zero, circ, rand };

const char* vec_mode_name(VecMode mode);

/// Copies of x followed by a tail of length D_T mod D_S filled per mode. zeta is
/// used by rand only and must have exactly the tail length.
TensorD expand_vector(const TensorD& x, std::size_t d_t, VecMode mode,
                      std::span<const double> zeta = {});

/// Prefix x*[:D_S]; inverts every vector expansion.
TensorD invert_vector_expansion(const TensorD& xstar, std::size_t d_s);

/// Rows repeated circularly; tail rows are the row mean, zero, or leading rows.
/// Satisfies M* x == expand_vector(M x, D_T, mode).
TensorD expand_matrix_rows(const TensorD& m, std::size_t d_t, VecMode mode);

enum class ColMode { rand, circ };

/// Column blocks of an expanded [P x D_T] matrix.
///   parts: floor(D_T/D_S) matrices of shape [P x D_S].
///   tail:  [P x (D_T mod D_S)]; zeta for rand, M^res for circ; empty when the
///          widths divide.
struct ColumnSplit {
    std::vector<TensorD> parts;
    TensorD tail;
};

/// rand is (V_zero, Id)-lossless and needs sum(parts) == M. circ is
/// (V_circ, Id)-lossless and needs sum(parts) + [M^res, 0] == M. Violations
/// beyond 1e-12 relative to the largest magnitude involved throw PlanError.
TensorD expand_matrix_cols(const TensorD& m, std::size_t d_t, ColMode mode, const ColumnSplit& split);

/// Validates split against m without building the expanded matrix.
void check_column_split(const TensorD& m, std::size_t d_t, ColMode mode, const ColumnSplit& split);

/// expand_vector for avg/zero/circ biases.
TensorD expand_bias(const TensorD& b, std::size_t d_t, VecMode mode);

/// sqrt(floor(D_T/D_S) * D_S / D_T).
double norm_eta(std::size_t d_s, std::size_t d_t);

struct ExpandedNorm {
    TensorD weight;
    TensorD bias;  // empty for RMSNorm
    double eps = 0.0;
};

/// mu* = eta * V_rand(mu; zeta), beta* = V_zero(beta), eps* = eta^2 * eps.
/// (V_avg, V_zero)-lossless.
ExpandedNorm expand_layernorm(const TensorD& mu, const TensorD& beta, double eps, std::size_t d_t,
                              std::span<const double> zeta);

/// mu* = eta * V_rand(mu; zeta), eps* = eta^2 * eps. (V_zero, V_zero)-lossless.
ExpandedNorm expand_rmsnorm(const TensorD& mu, double eps, std::size_t d_t,
                            std::span<const double> zeta);

}  // namespace lemon
