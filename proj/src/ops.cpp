// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ieadapt/errors.hpp"
#include "ieadapt/kernels.hpp"

namespace ieadapt {

Tensor row_softmax(const Tensor& logits) {
    require_rank(logits, 2, "row_softmax");
    Tensor out = logits;
    kernels::omp::row_softmax(out.raw(), out.dim(0), out.dim(1));
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    if (a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: inner dims differ " + dims_to_string(a.dims()) + " x " +
                         dims_to_string(b.dims()));
    }
    Tensor c({a.dim(0), b.dim(1)});
    kernels::omp::matmul(a.raw(), b.raw(), c.raw(), a.dim(0), a.dim(1), b.dim(1));
    return c;
}

Tensor gaussian(SeededRng& rng, const Dims& dims) {
    Tensor t(dims);
    for (auto& v : t.data()) v = static_cast<float>(rng.normal());
    return t;
}

Tensor layer_norm(const Tensor& x, float eps) {
    require_rank(x, 2, "layer_norm");
    if (x.dim(1) == 0) throw ShapeError("layer_norm: empty rows");
    Tensor y(x.dims());
    kernels::omp::layer_norm(x.raw(), y.raw(), x.dim(0), x.dim(1), eps);
    return y;
}

Tensor transpose(const Tensor& m) {
    require_rank(m, 2, "transpose");
    Tensor t({m.dim(1), m.dim(0)});
    for (std::size_t r = 0; r < m.dim(0); ++r)
        for (std::size_t c = 0; c < m.dim(1); ++c) t.at(c, r) = m.at(r, c);
    return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
    Tensor out = a;
    add_inplace(out, b);
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
    return out;
}

Tensor scale(const Tensor& a, float s) {
    Tensor out = a;
    for (auto& v : out.data()) v *= s;
    return out;
}

void add_inplace(Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "add");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

double l2_norm(const Tensor& a) {
    double s = 0.0;
    for (float v : a.data()) s += static_cast<double>(v) * v;
    return std::sqrt(s);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

double relative_l2(const Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "relative_l2");
    double num = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        num += d * d;
    }
    const double den = l2_norm(b);
    return den > 0.0 ? std::sqrt(num) / den : std::sqrt(num);
}

}  // namespace ieadapt
