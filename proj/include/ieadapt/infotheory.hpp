// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ieadapt/attention.hpp"

namespace ieadapt {

/// Per-layer entropy and energy summary. Entropy is in nats.
struct LayerStats {
    int layer_index = 0;
    AttentionMode mode = AttentionMode::spatial;
    std::size_t n_tokens = 0;
    double entropy = 0.0;
    double entropy_pct = 0.0;  // entropy / (N ln N)
    double energy_map = 0.0;
    double energy_out = 0.0;
    int timestep = 0;
};

/// -sum a ln a over all N*N entries of one [N x N] slice (0 ln 0 = 0).
double slice_entropy(std::span<const float> nxn);
/// Sum of squares, float64 accumulator.
double energy(std::span<const float> values);

/// Mean over heads of the per-head entropy. Throws ValidationError on
/// negative entries.
double entropy(const AttentionMap& map);
double energy_map(const AttentionMap& map);
double energy_out(const Tensor& av);

/// N ln N, the entropy of the uniform map; 0 for N <= 1.
double max_entropy(std::size_t n);
double entropy_pct(double entropy_nats, std::size_t n);

/// Layer indices ordered by entropy_pct descending; ties keep lower layer
/// index first. Throws DomainError on empty input.
std::vector<int> rank_layers(std::span<const LayerStats> stats);

/// The floor(rho * n) layers of lowest entropy_pct (ties: lower index),
/// returned in ascending layer order.
std::vector<int> select_bottom_fraction(std::span<const LayerStats> stats, double rho = 0.5);

/// argmax of entropy_pct, ties to the lower layer index.
int select_max(std::span<const LayerStats> stats);

inline constexpr const char* kLayerStatsCsvHeader =
    "run_id,timestep,layer_index,mode,n_tokens,entropy,entropy_pct,energy_map,energy_out";

void write_layer_stats_csv(std::ostream& os, const std::string& run_id, std::span<const LayerStats> stats,
                           bool header = true);
std::vector<LayerStats> read_layer_stats_csv(std::istream& is);

}  // namespace ieadapt
