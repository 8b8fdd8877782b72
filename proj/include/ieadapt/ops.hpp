// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ieadapt/rng.hpp"
#include "ieadapt/tensor.hpp"

namespace ieadapt {

/// Numerically stable softmax over each row of a 2-D tensor.
Tensor row_softmax(const Tensor& logits);

/// [R x K] * [K x C]. Each output element sums over K in ascending order, so
/// the result does not depend on thread count.
Tensor matmul(const Tensor& a, const Tensor& b);

/// i.i.d. standard normal draws; advances `rng`.
Tensor gaussian(SeededRng& rng, const Dims& dims);

/// Per-row standardization (no affine part).
Tensor layer_norm(const Tensor& x, float eps = 1e-5f);

Tensor transpose(const Tensor& m);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
void add_inplace(Tensor& a, const Tensor& b);

/// Euclidean norm, accumulated in double.
double l2_norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
/// ||a - b|| / ||b||.
double relative_l2(const Tensor& a, const Tensor& b);

}  // namespace ieadapt
