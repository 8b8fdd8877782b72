// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Raw-pointer compute kernels. Each kernel exists twice: a serial reference
// and an OpenMP version that partitions the outermost independent loop. The
// per-element arithmetic is shared, so both produce identical bits for any
// thread count.

#include <cstddef>
#include <cstdint>

namespace ieadapt::kernels {

/// Token layout for blocked attention: `index[b * n + i]` is the row (in a
/// token-major [tokens x D] matrix) of the i-th token of block b.
struct BlockLayout {
    const std::uint32_t* index;
    std::size_t blocks;
    std::size_t n;  // tokens per block
};

#define IEADAPT_KERNEL_DECLS                                                                      \
    /* c[R x C] = a[R x K] * b[K x C], summation over K left to right */                        \
    void matmul(const float* a, const float* b, float* c, std::size_t rows, std::size_t inner,  \
                std::size_t cols);                                                               \
    /* in place, rows of length n */                                                             \
    void row_softmax(float* x, std::size_t rows, std::size_t n);                                 \
    void layer_norm(const float* x, float* y, std::size_t rows, std::size_t d, float eps);       \
    /* maps[B x H x N x N] = softmax(Q_h K_h^T * scale) per block and head */                    \
    void block_attention_maps(const float* q, const float* k, std::size_t d, std::size_t heads,  \
                              BlockLayout layout, float scale, float* maps);                     \
    /* out[token, head slice] = sum_j maps[b,h,i,j] * v[token_j, head slice] */                  \
    void block_apply_maps(const float* maps, const float* v, std::size_t d, std::size_t heads,   \
                          BlockLayout layout, float* out);

namespace serial {
IEADAPT_KERNEL_DECLS
}  // namespace serial

namespace omp {
IEADAPT_KERNEL_DECLS
}  // namespace omp

#undef IEADAPT_KERNEL_DECLS

/// Worker threads used by the omp kernels (1 when built without OpenMP).
int max_threads();
void set_threads(int n);
bool openmp_enabled();

}  // namespace ieadapt::kernels
