// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ieadapt/adapt.hpp"
#include "ieadapt/metrics.hpp"

namespace ieadapt {

enum class SweepKind { single_layer, multi_layer, blend, strategy, rho };

std::string_view to_string(SweepKind k);
SweepKind parse_sweep_kind(std::string_view text);

/// The bundled synthetic prompt set.
const std::vector<std::string>& default_prompts();

/// Non-empty, non-comment lines of a prompt file.
std::vector<std::string> read_prompts(const std::filesystem::path& path);

struct SweepSpec {
    SweepKind kind = SweepKind::single_layer;
    std::vector<std::string> prompts;     // empty: the bundled set; "src|dst" lines for rho sweeps
    std::vector<char> matrices{'I', 'U'};
    std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<int> layers;              // single/blend targets; empty: every layer
    std::vector<std::string> combos;      // multi-layer presets or explicit "0;2;5"
    std::vector<GuidanceSpec> strategies;
    std::vector<double> rhos{0.25, 0.5, 0.75, 1.0};
    std::vector<std::uint64_t> seeds{0};
    double omega = 9.0;                   // CFG weight of baseline and perturbed runs
    int steps = 25;

    void validate() const;
    /// Sorted key=value lines; the hash is independent of field order.
    std::string canonical() const;
    std::string hash() const;
};

struct RunRecord {
    std::string run_id;
    std::string spec_hash;
    std::string prompt_id;
    std::string prompt;
    std::uint64_t seed = 0;
    std::string layer_set;  // layers joined with ';'
    std::string mode_set;   // distinct modes joined with ';'
    std::string matrix;     // I, U, blend, a strategy label, or rho
    double alpha = 0.0;     // blend alpha or rho
    MetricRecord metrics;
    double entropy_pct_mean = 0.0;
    std::string status = "ok";
};

struct SweepOptions {
    std::filesystem::path out_dir;  // empty: keep everything in memory
    std::size_t workers = 1;
};

struct SweepStats {
    std::size_t baselines = 0;
    std::size_t executed = 0;
    std::size_t resumed = 0;
};

/// Resolves a layer-set name (preset or explicit list) for one model and
/// per-layer probe.
std::vector<int> resolve_layer_set(const std::string& name, const ToyVDM& model,
                                   const std::vector<LayerStats>& probe);

/// Runs every perturbation of the sweep against one baseline per
/// (prompt, seed). Completed runs found under out_dir/runs are reused.
std::vector<RunRecord> run_sweep(const SweepSpec& spec, const ToyVDM& model, const NoiseSchedule& sched,
                                 const SweepOptions& opts = {}, SweepStats* stats = nullptr);

/// One row of the per-layer entropy report.
struct EntropyRow {
    int layer_index = 0;
    AttentionMode mode = AttentionMode::spatial;
    std::size_t n_tokens = 0;
    double entropy = 0.0;
    double entropy_pct = 0.0;
    double energy_map = 0.0;
    double energy_out = 0.0;
    double energy_v = 0.0;  // per-unit means of E(V), E(AV), E(IV), E(UV)
    double energy_av = 0.0;
    double energy_iv = 0.0;
    double energy_uv = 0.0;
    bool eiv_equals_ev = true;
    double containment = 0.0;  // fraction of units with E(UV) <= E(AV) <= E(IV)
};

struct EntropyReportOptions {
    ProbePolicy policy = ProbePolicy::first_step;
    std::uint64_t seed = 0;
    double omega = 9.0;
    const Registry* base = nullptr;  // extra hooks applied during the probe
};

/// Per-layer entropy/energy statistics averaged over prompts. Writes
/// entropy_report.csv, layer_stats.csv and SVG charts when out_dir is set.
std::vector<EntropyRow> entropy_report(const ToyVDM& model, const std::vector<std::string>& prompts,
                                       const NoiseSchedule& sched, const EntropyReportOptions& opts,
                                       const std::filesystem::path& out_dir = {});

std::string report_header();
std::string report_row(const RunRecord& r);
RunRecord parse_report_row(const std::string& line);

/// Writes report.csv and one grouped bar chart per metric into out_dir.
void emit_report(const std::vector<RunRecord>& records, const std::filesystem::path& out_dir);

/// Minimal grouped bar chart: values[group][series].
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<std::string>& series,
                          const std::vector<std::vector<double>>& values);

}  // namespace ieadapt
