// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ieadapt/infotheory.hpp"
#include "ieadapt/sampler.hpp"

namespace ieadapt {

enum class ProbePolicy { first_step, mean_over_steps };

std::string_view to_string(ProbePolicy p);
ProbePolicy parse_probe_policy(std::string_view text);

/// Per-layer statistics of one recorded layer: entropy and energy averaged
/// over token blocks and heads, energy_out summed over the layer.
LayerStats layer_stats(const AttentionRecord& rec);

/// Recording-only pass over the source branch. first_step: the conditional
/// forward at t = T on x_T. mean_over_steps: conditional branch of a CFG
/// trajectory with weight `omega`, entropy_pct averaged over all steps.
std::vector<LayerStats> probe_entropy(const ToyVDM& model, const Tensor& x_T, const ConditionPair& conds,
                                      const NoiseSchedule& sched, ProbePolicy policy, double omega = 9.0,
                                      const Registry* base = nullptr);
std::vector<LayerStats> probe_entropy(const ToyVDM& model, const std::string& prompt, std::uint64_t seed,
                                      const NoiseSchedule& sched, ProbePolicy policy, double omega = 9.0);

struct EnhanceResult {
    Tensor x0;
    int layer = -1;  // the maximum-entropy layer swapped in the F* branches
    std::vector<LayerStats> probe;
};

/// Probe, register the max-entropy layer (U in positive, I in negative
/// branches) and sample with the given guidance.
EnhanceResult enhance(const ToyVDM& model, const std::string& prompt, std::uint64_t seed,
                      const NoiseSchedule& sched, const GuidanceSpec& spec,
                      ProbePolicy policy = ProbePolicy::first_step, HookLog* log = nullptr);

enum class LayerPolicy { entropy, tokenflow, explicit_set };
enum class InjectKind { map, kv, value };

std::string_view to_string(LayerPolicy p);
std::string_view to_string(InjectKind k);
LayerPolicy parse_layer_policy(std::string_view text);
InjectKind parse_inject_kind(std::string_view text);

struct EditConfig {
    double rho = 0.5;
    ProbePolicy probe = ProbePolicy::first_step;
    double omega = 9.0;       // CFG weight of both edit branches, generated videos
    double real_omega = 1.0;  // inversion and regeneration weight for real videos
    LayerPolicy layer_policy = LayerPolicy::entropy;
    InjectKind inject = InjectKind::map;
    std::vector<int> layers;  // used with LayerPolicy::explicit_set
    /// Precomputed per-layer statistics; when non-empty the probe is skipped.
    std::vector<LayerStats> probe_stats;
};

struct EditResult {
    Tensor src_latent, dst_latent;
    Tensor src_video, dst_video;
    std::vector<int> layers;  // the injected set
    std::vector<LayerStats> probe;
    HookLog log;
};

/// Contiguous span of decoder-stage layers (the fixed-layer baseline).
std::vector<int> tokenflow_layers(const ToyVDM& model);

/// Source and target trajectories share z_T; at every step the source
/// records its maps at the selected layers and the target injects them.
EditResult edit_generated(const ToyVDM& model, const std::string& src_prompt, const std::string& dst_prompt,
                          std::uint64_t seed, const NoiseSchedule& sched, const EditConfig& cfg);

/// Inverts x0 under the source prompt, then runs the same record/inject loop
/// from the recovered x_T; the source trajectory is the reconstruction.
EditResult edit_real(const ToyVDM& model, const Tensor& x0, const std::string& src_prompt,
                     const std::string& dst_prompt, const NoiseSchedule& sched, const EditConfig& cfg);

/// Shared loop of both editing entry points.
EditResult edit_from(const ToyVDM& model, const Tensor& x_T, const ConditionPair& src, const ConditionPair& dst,
                     const NoiseSchedule& sched, const EditConfig& cfg, double omega);

/// key=value manifest written next to edit outputs.
void write_edit_manifest(const std::filesystem::path& path, const EditResult& r, const EditConfig& cfg,
                         const std::string& src_prompt, const std::string& dst_prompt, std::uint64_t seed,
                         const NoiseSchedule& sched, const std::string& source_kind);

}  // namespace ieadapt
