// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
// Serial vs OpenMP kernel timings, plus one full denoiser forward.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "ieadapt/attention.hpp"
#include "ieadapt/denoiser.hpp"
#include "ieadapt/kernels.hpp"
#include "ieadapt/ops.hpp"
#include "ieadapt/sampler.hpp"

using namespace ieadapt;

namespace {

double time_ms(int reps, const std::function<void()>& fn) {
    fn();
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, double serial_ms, double omp_ms, bool same) {
    std::printf("%-22s serial %9.3f ms   omp %9.3f ms   x%.2f   %s\n", name, serial_ms, omp_ms, serial_ms / omp_ms,
                same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    const int reps = argc > 1 ? std::atoi(argv[1]) : 20;
    std::printf("threads=%d openmp=%s\n", kernels::max_threads(), kernels::openmp_enabled() ? "on" : "off");
    SeededRng rng(1);

    {
        const std::size_t r = 512, k = 64, c = 256;
        const Tensor a = gaussian(rng, {r, k}), b = gaussian(rng, {k, c});
        Tensor s({r, c}), o({r, c});
        const double ts = time_ms(reps, [&] { kernels::serial::matmul(a.raw(), b.raw(), s.raw(), r, k, c); });
        const double to = time_ms(reps, [&] { kernels::omp::matmul(a.raw(), b.raw(), o.raw(), r, k, c); });
        row("matmul 512x64x256", ts, to, s == o);
    }
    {
        const std::size_t rows = 4096, n = 64;
        const Tensor x = gaussian(rng, {rows, n});
        Tensor s = x, o = x;
        const double ts = time_ms(reps, [&] {
            s = x;
            kernels::serial::row_softmax(s.raw(), rows, n);
        });
        const double to = time_ms(reps, [&] {
            o = x;
            kernels::omp::row_softmax(o.raw(), rows, n);
        });
        row("row_softmax 4096x64", ts, to, s == o);
    }
    {
        const std::size_t frames = 8, pixels = 64, d = 16;
        const TokenBlocks tb = make_token_blocks(AttentionMode::spatial, frames, pixels);
        const Tensor q = gaussian(rng, {frames * pixels, d}), k = gaussian(rng, {frames * pixels, d}),
                     v = gaussian(rng, {frames * pixels, d});
        Tensor ms({tb.blocks, 1, tb.n, tb.n}), mo = ms, as({frames * pixels, d}), ao = as;
        const double ts = time_ms(reps, [&] {
            kernels::serial::block_attention_maps(q.raw(), k.raw(), d, 1, tb.layout(), 0.25f, ms.raw());
            kernels::serial::block_apply_maps(ms.raw(), v.raw(), d, 1, tb.layout(), as.raw());
        });
        const double to = time_ms(reps, [&] {
            kernels::omp::block_attention_maps(q.raw(), k.raw(), d, 1, tb.layout(), 0.25f, mo.raw());
            kernels::omp::block_apply_maps(mo.raw(), v.raw(), d, 1, tb.layout(), ao.raw());
        });
        row("spatial attention", ts, to, ms == mo && as == ao);
    }
    {
        const ToyVDM m = init_model(ModelConfig{});
        const Tensor x = initial_noise(m.config, 0);
        const Condition c = embed_prompt("a red fox", m.config.channels);
        const double ms = time_ms(reps, [&] { (void)predict_noise(m, {x, 500}, c); });
        std::printf("%-22s %9.3f ms\n", "predict_noise default", ms);
    }
    return 0;
}
