// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ieadapt/denoiser.hpp"
#include "ieadapt/rng.hpp"

namespace ieadapt {

/// Double-precision copy of every model tensor, in named_tensors order.
struct ParamSet {
    std::vector<std::string> names;
    std::vector<Dims> dims;
    std::vector<std::vector<double>> values;

    static ParamSet from_model(const ToyVDM& model);
    /// Same layout, all zeros.
    ParamSet zeros_like() const;
    /// Writes the values back into the float model.
    void store(ToyVDM& model) const;
    std::size_t find(std::string_view name) const;
};

/// One noised training example: x_t = sqrt(abar) x0 + sqrt(1 - abar) eps.
struct TrainSample {
    Tensor x_t;
    int t = 0;
    Condition cond;
    Tensor eps;
};

/// Synthetic training latent: a square moving one cell per frame, its
/// channel pattern tied to the prompt embedding.
Tensor moving_square_latent(const ModelConfig& cfg, SeededRng& rng, Condition* cond_out);

std::vector<TrainSample> make_batch(const ModelConfig& cfg, SeededRng& rng, std::size_t n);

/// Noise prediction of the double-precision forward pass, [F x C x H x W].
std::vector<double> forward_double(const ToyVDM& model, const ParamSet& params, const TrainSample& s);

/// Mean squared noise-prediction error over the batch. When `grads` is
/// non-null it receives d loss / d param (fixed tensors get zero).
double loss_and_grad(const ToyVDM& model, const ParamSet& params, const std::vector<TrainSample>& batch,
                     ParamSet* grads);

struct TrainConfig {
    int steps = 2000;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch = 1;
    std::size_t eval_batch = 8;
    std::uint64_t seed = 42;
};

struct TrainResult {
    double eval_loss_initial = 0.0;
    double eval_loss_final = 0.0;
    std::vector<double> losses;  // training loss per step
};

/// Adam on the MSE objective. The fixed evaluation batch is drawn before
/// training from the seeded stream. `progress` is called every step.
TrainResult train(ToyVDM& model, const TrainConfig& cfg,
                  const std::function<void(int, double)>& progress = {});

}  // namespace ieadapt
