// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "ieadapt/tensor.hpp"

namespace ieadapt {

// All metrics take videos [F x C x H x W] with pixels in [-1, 1].

struct MetricRecord {
    double ssim = 0.0;
    double mse = 0.0;
    double motion_magnitude = 0.0;
    double motion_smoothness = 0.0;
    double subject_consistency = 0.0;
    double sharpness = 0.0;
    std::string baseline_run_id;
    std::string perturbed_run_id;
};

/// Single-scale SSIM with an 8x8 uniform window at stride 4 on the [0, 1]
/// range, averaged over windows, channels and frames.
double ssim(const Tensor& a, const Tensor& b);
double mse(const Tensor& a, const Tensor& b);
double motion_magnitude(const Tensor& v);
double motion_smoothness(const Tensor& v);
double subject_consistency(const Tensor& v);
double sharpness(const Tensor& v);

/// Pairwise terms against the baseline; the per-video terms describe `perturbed`.
MetricRecord compare(const Tensor& baseline, const Tensor& perturbed);

}  // namespace ieadapt
