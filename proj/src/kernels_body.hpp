// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Loop bodies shared by the serial and OpenMP kernels.

#include <cmath>
#include <cstddef>

#include "ieadapt/kernels.hpp"

namespace ieadapt::kernels::body {

inline void matmul_row(const float* a_row, const float* b, float* c_row, std::size_t inner,
                       std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) c_row[j] = 0.0f;
    for (std::size_t k = 0; k < inner; ++k) {
        const float aik = a_row[k];
        const float* b_row = b + k * cols;
        for (std::size_t j = 0; j < cols; ++j) c_row[j] += aik * b_row[j];
    }
}

inline void softmax_row(float* x, std::size_t n) {
    float mx = x[0];
    for (std::size_t j = 1; j < n; ++j) mx = x[j] > mx ? x[j] : mx;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        x[j] = std::exp(x[j] - mx);
        sum += x[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < n; ++j) x[j] = static_cast<float>(x[j] * inv);
}

inline void layer_norm_row(const float* x, float* y, std::size_t d, float eps) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += x[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double c = x[j] - mean;
        var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    for (std::size_t j = 0; j < d; ++j) y[j] = static_cast<float>((x[j] - mean) * inv);
}

// One (block, head) pair of the attention-map kernel.
inline void attention_map_unit(const float* q, const float* k, std::size_t d, std::size_t heads,
                               BlockLayout layout, float scale, float* maps, std::size_t unit) {
    const std::size_t b = unit / heads;
    const std::size_t h = unit % heads;
    const std::size_t dh = d / heads;
    const std::size_t n = layout.n;
    const std::uint32_t* idx = layout.index + b * n;
    float* m = maps + unit * n * n;
    for (std::size_t i = 0; i < n; ++i) {
        const float* qi = q + static_cast<std::size_t>(idx[i]) * d + h * dh;
        float* mrow = m + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const float* kj = k + static_cast<std::size_t>(idx[j]) * d + h * dh;
            float acc = 0.0f;
            for (std::size_t c = 0; c < dh; ++c) acc += qi[c] * kj[c];
            mrow[j] = acc * scale;
        }
        softmax_row(mrow, n);
    }
}

inline void apply_map_unit(const float* maps, const float* v, std::size_t d, std::size_t heads,
                           BlockLayout layout, float* out, std::size_t unit) {
    const std::size_t b = unit / heads;
    const std::size_t h = unit % heads;
    const std::size_t dh = d / heads;
    const std::size_t n = layout.n;
    const std::uint32_t* idx = layout.index + b * n;
    const float* m = maps + unit * n * n;
    for (std::size_t i = 0; i < n; ++i) {
        float* oi = out + static_cast<std::size_t>(idx[i]) * d + h * dh;
        for (std::size_t c = 0; c < dh; ++c) oi[c] = 0.0f;
        for (std::size_t j = 0; j < n; ++j) {
            const float w = m[i * n + j];
            const float* vj = v + static_cast<std::size_t>(idx[j]) * d + h * dh;
            for (std::size_t c = 0; c < dh; ++c) oi[c] += w * vj[c];
        }
    }
}

}  // namespace ieadapt::kernels::body
