#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ufin/numeric/tape.hpp"

namespace ufin {

// Differentiable tape ops. All 2-D ops treat a rank-1 tensor as a single
// row. There is no implicit broadcasting: operands of elementwise ops must
// have identical shapes, and mismatches raise ShapeError naming both shapes.

Var matmul(Var a, Var b);                // [m,k] x [k,n] -> [m,n]
Var linear(Var x, Var weight, Var bias);  // x[B,in] * w[in,out] + b[out]; bias may be invalid
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
Var sum(Var a);  // -> [1]
Var concat_cols(std::span<const Var> parts);
Var column(Var x, std::size_t j);  // [B,n] -> [B,1]
Var scale_rows(Var x, Var factors);  // x[B,n] * factors[B,1]
// sum_j weights[:, j] * items[j]; every item is [B,n], weights is [B,L].
Var weighted_sum(std::span<const Var> items, Var weights);

// Row-wise LayerNorm over consecutive groups of `group` columns, followed by
// the elementwise affine map. gain/bias have one entry per column.
Var layer_norm(Var x, Var gain, Var bias, std::size_t group, double eps = 1e-5);
Var softmax_rows(Var x);

Var sigmoid(Var x);
Var softplus(Var x);
Var relu(Var x);
Var exp(Var x);
Var log(Var x);  // rejects non-positive inputs

// Row lookup; index -1 yields a zero row and receives no gradient.
Var gather_rows(Var table, std::span<const std::int64_t> indices);

// Scalar helpers shared by ops, losses and tests.
double sigmoid(double x);
double softplus(double x);
double inverse_softplus(double y);

}  // namespace ufin
