// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ieadapt/denoiser.hpp"

namespace ieadapt {

/// Linear beta schedule with the DDIM timestep subsequence.
struct NoiseSchedule {
    int train_steps = 1000;
    std::vector<double> betas;       // index t = 1..T; betas[0] = 0
    std::vector<double> alphas;      // 1 - beta
    std::vector<double> alpha_bars;  // cumulative product; alpha_bars[0] = 1
    std::vector<int> steps;          // descending DDIM timesteps, e.g. 1000, 960, ..., 40

    double alpha_bar(int t) const;
    /// (t, t_prev) pairs visited by the sampler; the last t_prev is 0.
    std::vector<std::pair<int, int>> transitions() const;
};

NoiseSchedule make_schedule(int inference_steps = 25, int train_steps = 1000, double beta_start = 1e-4,
                            double beta_end = 2e-2);

/// x0_hat = (x_t - sqrt(1 - abar_t) eps) / sqrt(abar_t)
Tensor predict_x0(const Tensor& x_t, int t, const Tensor& eps, const NoiseSchedule& sched);

/// Deterministic (eta = 0) DDIM update from t to t_prev < t.
Tensor ddim_step(const Tensor& x_t, int t, int t_prev, const Tensor& eps, const NoiseSchedule& sched);

/// The same update without the direction check; inversion moves t upward.
Tensor ddim_transfer(const Tensor& x, int t_from, int t_to, const Tensor& eps, const NoiseSchedule& sched);

enum class Combo { none, A_minus_I, U_minus_A, U_minus_I };
enum class Strategy { none, eq5, s1, s2, s3, s4 };
enum class Branch { uA, cA, cU, cI, uI };

std::string_view to_string(Combo c);
std::string_view to_string(Strategy s);
std::string_view to_string(Branch b);
Combo parse_combo(std::string_view text);
Strategy parse_strategy(std::string_view text);

struct GuidanceSpec {
    double omega = 9.0;
    double lambda = 1.0;
    Combo combo = Combo::none;
    Strategy strategy = Strategy::none;  // none: classic CFG

    void validate() const;
    /// Branches the combination reads, in the fixed evaluation order
    /// uA, cA, cU, cI, uI. Terms multiplied by a zero lambda are dropped.
    std::vector<Branch> required_branches() const;
};

/// Noise estimates of the five forward variants: (u|c) x (A|U|I).
struct BranchSet {
    std::optional<Tensor> uA, cA, cU, cI, uI;

    std::optional<Tensor>& get(Branch b);
    const std::optional<Tensor>& get(Branch b) const;
};

/// eps_u + omega * (eps_c - eps_u); omega = 1 returns eps_c exactly.
Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double omega);

/// Combines the branches as the strategy prescribes:
///   eq5: uA + w (cA - uA) + l (pos - neg), (pos, neg) from the combo
///   s1:  uA + w (cA - uI)
///   s2:  uA + w (cA - uA) + l (cA - cI)
///   s3:  uA + w (cU - uA) + l (cA - cI)
///   s4:  uA + w (cU - uA)
/// Throws SpecError when a needed branch is missing.
Tensor ie_guidance_combine(const BranchSet& branches, const GuidanceSpec& spec);

enum class RecordPolicy { none, first_step, all_steps };

/// Hooks and recording configuration of one sampling run.
struct SamplePlan {
    std::optional<Registry> registry;      // applied to every branch
    std::vector<int> guidance_layers;      // layers swapped for U / I in the F* branches
    RecordPolicy record = RecordPolicy::none;
    bool capture_outputs = false;
    bool capture_kv = false;
    std::shared_ptr<RecordStore> store;    // receives records when set
    HookLog* log = nullptr;
    std::optional<std::filesystem::path> trace_dir;
};

/// Conditioning pair for a guided step; `uncond` is the null prompt or the
/// negative prompt.
struct ConditionPair {
    Condition cond;
    Condition uncond;
};

struct StepOutput {
    Tensor eps;
    BranchSet branches;
    std::vector<AttentionRecord> records;
};

/// All branches the guidance needs at one timestep, combined.
StepOutput guided_eps(const ToyVDM& model, const Tensor& x, int t, const ConditionPair& conds,
                      const GuidanceSpec& spec, const Registry& base, const std::vector<int>& guidance_layers,
                      bool record, bool capture_outputs, bool capture_kv, HookLog* log);

struct SampleResult {
    Tensor x0;
    std::vector<AttentionRecord> records;
};

Tensor initial_noise(const ModelConfig& cfg, std::uint64_t seed);

/// Guided DDIM sampling from the seeded z_T.
SampleResult sample(const ToyVDM& model, const std::string& prompt, const std::string& neg_prompt,
                    std::uint64_t seed, const NoiseSchedule& sched, const GuidanceSpec& guidance,
                    const SamplePlan& plan = {});

/// Guided DDIM sampling from a given x_T.
SampleResult sample_from(const ToyVDM& model, const Tensor& x_T, const ConditionPair& conds,
                         const NoiseSchedule& sched, const GuidanceSpec& guidance, const SamplePlan& plan = {});

/// First-order DDIM inversion. Returns x at t = 0, steps ascending, ..., T;
/// each move t -> t_next uses eps(x_t, t_next, cond).
std::vector<Tensor> ddim_invert(const ToyVDM& model, const Tensor& x0, const Condition& cond,
                                const NoiseSchedule& sched, const ForwardHooks& hooks = {});

}  // namespace ieadapt
