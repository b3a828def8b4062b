// Copyright 2026 The conerf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "conerf/tape.hpp"

namespace conerf::ad {

// Element-wise binary operations broadcast like numpy over the matrix view:
// along each axis the extents must match or one of them must be 1.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var neg(Var a);
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);

/// a[N,K] * b[K,M]
Var matmul(Var a, Var b);
/// x[N,K] * w[K,M] + bias[1,M]
Var linear(Var x, Var w, Var bias);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var softplus(Var a);
Var exp(Var a);
Var log(Var a);
Var sin(Var a);
Var cos(Var a);
Var square(Var a);
/// Gradient passes only where lo < a < hi.
Var clamp(Var a, double lo, double hi);

/// Sum of all elements, 1x1.
Var sum(Var a);
Var mean(Var a);
/// Sum over columns, [N,1].
Var row_sum(Var a);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Index begin, Index count);
/// out[i] = a[indices[i]]; backward scatter-adds.
Var gather_rows(Var a, std::span<const Index> indices);
Var reshape(Var a, Index rows, Index cols);

/// Forward identity, backward zero.
Var stop_gradient(Var a);

/// Rotates x[N,3] by the unit quaternion normalize((1,0,0,0) + q_raw[N,4])
/// (w,x,y,z order) and adds t[N,3].
Var quaternion_rigid_transform(Var q_raw, Var t, Var x);
/// Rotates x[N,2] by angle[N,1] (radians, counter-clockwise) and adds t[N,2].
Var planar_rigid_transform(Var angle, Var t, Var x);

}  // namespace conerf::ad
