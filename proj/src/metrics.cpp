// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ieadapt/errors.hpp"

namespace ieadapt {
namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr std::size_t kWindow = 8;
constexpr std::size_t kStride = 4;

void require_video(const Tensor& v, const char* what) { require_rank(v, 4, what); }

std::size_t frame_size(const Tensor& v) { return v.dim(1) * v.dim(2) * v.dim(3); }

// Window starts along one axis; a plane smaller than the window uses one
// window covering it.
std::vector<std::size_t> starts(std::size_t extent, std::size_t& win) {
    win = std::min(kWindow, extent);
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s + win <= extent; s += kStride) out.push_back(s);
    return out;
}

// Mean and (co)variance over a window, both images already on [0, 1]. The
// same routine serves variance (x = y) so ssim(v, v) is exactly one.
struct Moments {
    double mx, my, cov;
};

Moments window_moments(const float* x, const float* y, std::size_t stride, std::size_t r0, std::size_t c0,
                       std::size_t win) {
    const double n = static_cast<double>(win * win);
    double sx = 0.0, sy = 0.0;
    for (std::size_t r = 0; r < win; ++r) {
        for (std::size_t c = 0; c < win; ++c) {
            const std::size_t i = (r0 + r) * stride + c0 + c;
            sx += 0.5 * (static_cast<double>(x[i]) + 1.0);
            sy += 0.5 * (static_cast<double>(y[i]) + 1.0);
        }
    }
    const double mx = sx / n, my = sy / n;
    double cov = 0.0;
    for (std::size_t r = 0; r < win; ++r) {
        for (std::size_t c = 0; c < win; ++c) {
            const std::size_t i = (r0 + r) * stride + c0 + c;
            cov += (0.5 * (static_cast<double>(x[i]) + 1.0) - mx) * (0.5 * (static_cast<double>(y[i]) + 1.0) - my);
        }
    }
    return {mx, my, cov / n};
}

double frame_diff_norm(const Tensor& v, std::size_t f1, std::size_t f0) {
    const std::size_t fs = frame_size(v);
    const float* a = v.raw() + f1 * fs;
    const float* b = v.raw() + f0 * fs;
    double acc = 0.0;
    for (std::size_t i = 0; i < fs; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc) / std::sqrt(static_cast<double>(fs));
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    require_video(a, "ssim");
    require_same_dims(a, b, "ssim");
    const std::size_t planes = a.dim(0) * a.dim(1), h = a.dim(2), w = a.dim(3);
    std::size_t wh = 0, ww = 0;
    const auto rows = starts(h, wh);
    const auto cols = starts(w, ww);
    if (wh != ww) throw ShapeError("ssim: frames must be at least 8x8 or square");
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t p = 0; p < planes; ++p) {
        const float* x = a.raw() + p * h * w;
        const float* y = b.raw() + p * h * w;
        for (std::size_t r0 : rows) {
            for (std::size_t c0 : cols) {
                const Moments xy = window_moments(x, y, w, r0, c0, wh);
                const Moments xx = window_moments(x, x, w, r0, c0, wh);
                const Moments yy = window_moments(y, y, w, r0, c0, wh);
                const double num = (2.0 * xy.mx * xy.my + kC1) * (2.0 * xy.cov + kC2);
                const double den = (xy.mx * xy.mx + xy.my * xy.my + kC1) * (xx.cov + yy.cov + kC2);
                total += num / den;
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

double mse(const Tensor& a, const Tensor& b) {
    require_same_dims(a, b, "mse");
    if (a.size() == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double motion_magnitude(const Tensor& v) {
    require_video(v, "motion_magnitude");
    const std::size_t f = v.dim(0);
    if (f < 2) throw DomainError("motion_magnitude needs at least 2 frames");
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < f; ++t) acc += frame_diff_norm(v, t + 1, t);
    return acc / static_cast<double>(f - 1);
}

double motion_smoothness(const Tensor& v) {
    require_video(v, "motion_smoothness");
    const std::size_t f = v.dim(0);
    if (f < 3) throw DomainError("motion_smoothness needs at least 3 frames");
    const std::size_t fs = frame_size(v);
    double acc = 0.0;
    for (std::size_t t = 1; t + 1 < f; ++t) {
        const float* prev = v.raw() + (t - 1) * fs;
        const float* cur = v.raw() + t * fs;
        const float* next = v.raw() + (t + 1) * fs;
        double sq = 0.0;
        for (std::size_t i = 0; i < fs; ++i) {
            const double d = static_cast<double>(next[i]) - 2.0 * static_cast<double>(cur[i]) +
                             static_cast<double>(prev[i]);
            sq += d * d;
        }
        acc += std::sqrt(sq) / std::sqrt(static_cast<double>(fs));
    }
    return 1.0 / (1.0 + acc / static_cast<double>(f - 2));
}

double subject_consistency(const Tensor& v) {
    require_video(v, "subject_consistency");
    const std::size_t f = v.dim(0);
    if (f < 2) throw DomainError("subject_consistency needs at least 2 frames");
    const std::size_t fs = frame_size(v);
    std::vector<std::vector<double>> centered(f, std::vector<double>(fs));
    std::vector<double> norms(f, 0.0);
    for (std::size_t t = 0; t < f; ++t) {
        const float* x = v.raw() + t * fs;
        double mean = 0.0;
        for (std::size_t i = 0; i < fs; ++i) mean += x[i];
        mean /= static_cast<double>(fs);
        for (std::size_t i = 0; i < fs; ++i) {
            centered[t][i] = static_cast<double>(x[i]) - mean;
            norms[t] += centered[t][i] * centered[t][i];
        }
        norms[t] = std::sqrt(norms[t]);
    }
    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < f; ++t) {
        const bool z0 = norms[t] == 0.0, z1 = norms[t + 1] == 0.0;
        if (z0 && z1) {
            acc += 1.0;
            continue;
        }
        if (z0 || z1) continue;  // constant vs structured frame: no correlation
        double dot = 0.0;
        for (std::size_t i = 0; i < fs; ++i) dot += centered[t][i] * centered[t + 1][i];
        acc += std::clamp(dot / (norms[t] * norms[t + 1]), -1.0, 1.0);
    }
    return acc / static_cast<double>(f - 1);
}

double sharpness(const Tensor& v) {
    require_video(v, "sharpness");
    const std::size_t h = v.dim(2), w = v.dim(3);
    if (h < 3 || w < 3) throw DomainError("sharpness needs frames of at least 3x3");
    const std::size_t f = v.dim(0), c = v.dim(1);
    double total = 0.0;
    for (std::size_t fr = 0; fr < f; ++fr) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            const float* x = v.raw() + (fr * c + ch) * h * w;
            for (std::size_t y = 1; y + 1 < h; ++y) {
                for (std::size_t xx = 1; xx + 1 < w; ++xx) {
                    const double lap = static_cast<double>(x[(y - 1) * w + xx]) + x[(y + 1) * w + xx] +
                                       x[y * w + xx - 1] + x[y * w + xx + 1] - 4.0 * x[y * w + xx];
                    sum += lap;
                    sq += lap * lap;
                    ++n;
                }
            }
        }
        const double mean = sum / static_cast<double>(n);
        total += std::max(0.0, sq / static_cast<double>(n) - mean * mean);
    }
    return total / static_cast<double>(f);
}

MetricRecord compare(const Tensor& baseline, const Tensor& perturbed) {
    MetricRecord m;
    m.ssim = ssim(baseline, perturbed);
    m.mse = mse(baseline, perturbed);
    m.motion_magnitude = motion_magnitude(perturbed);
    m.motion_smoothness = perturbed.dim(0) >= 3 ? motion_smoothness(perturbed) : 1.0;
    m.subject_consistency = subject_consistency(perturbed);
    m.sharpness = sharpness(perturbed);
    return m;
}

}  // namespace ieadapt
