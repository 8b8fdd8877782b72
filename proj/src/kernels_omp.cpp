// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "kernels_body.hpp"
#ifdef _OPENMP
#include <omp.h>
#endif

namespace ieadapt::kernels::omp {

void matmul(const float* a, const float* b, float* c, std::size_t rows, std::size_t inner,
            std::size_t cols) {
    const auto r_end = static_cast<std::ptrdiff_t>(rows);
    #pragma omp parallel for schedule(static) if(rows * inner * cols >= 32768)
    for (std::ptrdiff_t r = 0; r < r_end; ++r) {
        body::matmul_row(a + r * inner, b, c + r * cols, inner, cols);
    }
}

void row_softmax(float* x, std::size_t rows, std::size_t n) {
    if (n == 0) return;
    const auto r_end = static_cast<std::ptrdiff_t>(rows);
    #pragma omp parallel for schedule(static) if(rows * n >= 4096)
    for (std::ptrdiff_t r = 0; r < r_end; ++r) body::softmax_row(x + r * n, n);
}

void layer_norm(const float* x, float* y, std::size_t rows, std::size_t d, float eps) {
    const auto r_end = static_cast<std::ptrdiff_t>(rows);
    #pragma omp parallel for schedule(static) if(rows * d >= 4096)
    for (std::ptrdiff_t r = 0; r < r_end; ++r) body::layer_norm_row(x + r * d, y + r * d, d, eps);
}

void block_attention_maps(const float* q, const float* k, std::size_t d, std::size_t heads,
                          BlockLayout layout, float scale, float* maps) {
    const auto units = static_cast<std::ptrdiff_t>(layout.blocks * heads);
    #pragma omp parallel for schedule(static) if(units * static_cast<std::ptrdiff_t>(layout.n * layout.n * d) >= 32768)
    for (std::ptrdiff_t u = 0; u < units; ++u) {
        body::attention_map_unit(q, k, d, heads, layout, scale, maps, static_cast<std::size_t>(u));
    }
}

void block_apply_maps(const float* maps, const float* v, std::size_t d, std::size_t heads,
                      BlockLayout layout, float* out) {
    const auto units = static_cast<std::ptrdiff_t>(layout.blocks * heads);
    #pragma omp parallel for schedule(static) if(units * static_cast<std::ptrdiff_t>(layout.n * layout.n * d) >= 32768)
    for (std::ptrdiff_t u = 0; u < units; ++u) {
        body::apply_map_unit(maps, v, d, heads, layout, out, static_cast<std::size_t>(u));
    }
}

}  // namespace ieadapt::kernels::omp

namespace ieadapt::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    omp_set_num_threads(n < 1 ? 1 : n);
#else
    (void)n;
#endif
}

bool openmp_enabled() {
#ifdef _OPENMP
    return true;
#else
    return false;
#endif
}

}  // namespace ieadapt::kernels
