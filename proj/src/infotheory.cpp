// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "ieadapt/errors.hpp"

namespace ieadapt {

double slice_entropy(std::span<const float> nxn) {
    double h = 0.0;
    for (float a : nxn) {
        if (a < 0.0f || std::isnan(a)) throw ValidationError("entropy: negative or NaN attention weight");
        if (a > 0.0f) {
            const double ad = a;
            h -= ad * std::log(ad);
        }
    }
    return h;
}

double energy(std::span<const float> values) {
    double e = 0.0;
    for (float v : values) e += static_cast<double>(v) * v;
    return e;
}

double entropy(const AttentionMap& map) {
    require_rank(map.values, 3, "entropy");
    const std::size_t heads = map.values.dim(0);
    const std::size_t nn = map.values.dim(1) * map.values.dim(2);
    double sum = 0.0;
    for (std::size_t h = 0; h < heads; ++h) sum += slice_entropy(map.values.data().subspan(h * nn, nn));
    return heads ? sum / static_cast<double>(heads) : 0.0;
}

double energy_map(const AttentionMap& map) {
    require_rank(map.values, 3, "energy_map");
    const std::size_t heads = map.values.dim(0);
    return heads ? energy(map.values.data()) / static_cast<double>(heads) : 0.0;
}

double energy_out(const Tensor& av) { return energy(av.data()); }

double max_entropy(std::size_t n) {
    return n > 1 ? static_cast<double>(n) * std::log(static_cast<double>(n)) : 0.0;
}

double entropy_pct(double entropy_nats, std::size_t n) {
    const double hmax = max_entropy(n);
    return hmax > 0.0 ? entropy_nats / hmax : 0.0;
}

namespace {

// Indices into `stats` sorted by (entropy_pct, layer_index) in the given direction.
std::vector<std::size_t> order_by_entropy(std::span<const LayerStats> stats, bool descending) {
    std::vector<std::size_t> idx(stats.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double ea = stats[a].entropy_pct, eb = stats[b].entropy_pct;
        if (ea != eb) return descending ? ea > eb : ea < eb;
        return stats[a].layer_index < stats[b].layer_index;
    });
    return idx;
}

}  // namespace

std::vector<int> rank_layers(std::span<const LayerStats> stats) {
    if (stats.empty()) throw DomainError("rank_layers: no layers");
    std::vector<int> out;
    for (auto i : order_by_entropy(stats, true)) out.push_back(stats[i].layer_index);
    return out;
}

std::vector<int> select_bottom_fraction(std::span<const LayerStats> stats, double rho) {
    if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("rho must lie in (0, 1]");
    const auto count = static_cast<std::size_t>(std::floor(rho * static_cast<double>(stats.size())));
    if (count == 0) throw DomainError("rho selects no layers (floor(rho * n) = 0)");
    const auto order = order_by_entropy(stats, false);
    std::vector<int> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(stats[order[i]].layer_index);
    std::sort(out.begin(), out.end());
    return out;
}

int select_max(std::span<const LayerStats> stats) {
    if (stats.empty()) throw DomainError("select_max: no layers");
    std::size_t best = 0;
    for (std::size_t i = 1; i < stats.size(); ++i) {
        const auto& s = stats[i];
        const auto& b = stats[best];
        if (s.entropy_pct > b.entropy_pct ||
            (s.entropy_pct == b.entropy_pct && s.layer_index < b.layer_index)) {
            best = i;
        }
    }
    return stats[best].layer_index;
}

void write_layer_stats_csv(std::ostream& os, const std::string& run_id, std::span<const LayerStats> stats,
                           bool header) {
    if (header) os << kLayerStatsCsvHeader << '\n';
    char buf[256];
    for (const auto& s : stats) {
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%zu,%.17g,%.17g,%.17g,%.17g", s.timestep, s.layer_index,
                      std::string(to_string(s.mode)).c_str(), s.n_tokens, s.entropy, s.entropy_pct, s.energy_map,
                      s.energy_out);
        os << run_id << ',' << buf << '\n';
    }
}

std::vector<LayerStats> read_layer_stats_csv(std::istream& is) {
    std::vector<LayerStats> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (first && line.rfind("run_id", 0) == 0) {
            first = false;
            continue;
        }
        first = false;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
        if (cols.size() != 9) throw IoError("layer stats CSV: expected 9 columns");
        LayerStats s;
        s.timestep = std::stoi(cols[1]);
        s.layer_index = std::stoi(cols[2]);
        s.mode = parse_attention_mode(cols[3]);
        s.n_tokens = std::stoul(cols[4]);
        s.entropy = std::stod(cols[5]);
        s.entropy_pct = std::stod(cols[6]);
        s.energy_map = std::stod(cols[7]);
        s.energy_out = std::stod(cols[8]);
        out.push_back(s);
    }
    return out;
}

}  // namespace ieadapt
