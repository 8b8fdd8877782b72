// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "ieadapt/attention.hpp"

namespace ieadapt {

/// Everything one attention layer produced during one forward pass. `maps`
/// holds the map that was actually applied (after any replacement or
/// injection) for every token block and head.
struct AttentionRecord {
    int layer_index = 0;
    AttentionMode mode = AttentionMode::spatial;
    int timestep = 0;
    std::string branch;
    std::size_t blocks = 0;
    std::size_t heads = 1;
    std::size_t n_tokens = 0;
    Tensor maps;  // [blocks x heads x N x N]

    // Per (block, head) energies of V, AV and UV.
    std::vector<double> energy_v, energy_av, energy_uv;

    // Optional captures (see ForwardHooks).
    Tensor keys, values;  // [T x D] token-major
    Tensor output;        // attention layer output after w_out, [T x D]

    AttentionMap block_map(std::size_t block) const;
};

/// Records of one run keyed by (branch, timestep, layer).
class RecordStore {
public:
    using Key = std::tuple<std::string, int, int>;

    void put(AttentionRecord rec);
    const AttentionRecord* find(const std::string& branch, int timestep, int layer) const;
    std::size_t size() const { return records_.size(); }
    void clear() { records_.clear(); }
    const std::map<Key, AttentionRecord>& all() const { return records_; }

private:
    std::map<Key, AttentionRecord> records_;
};

enum class HookAction {
    none,
    replace,     // map := ReplacementMatrix
    inject,      // map := source run's recorded map
    inject_kv,   // K, V := source run's keys/values (map recomputed from own Q)
    inject_v,    // V := source run's values
};

std::string_view to_string(HookAction a);

struct LayerHook {
    HookAction action = HookAction::none;
    ReplacementMatrix matrix;
    std::shared_ptr<const RecordStore> source;
    bool record = false;
    bool suppress_record = false;
};

/// One registry entry, for bulk registration.
struct Registration {
    int layer_index = 0;
    HookAction action = HookAction::none;
    ReplacementMatrix matrix;
    std::shared_ptr<const RecordStore> source;
    bool record = false;
    bool suppress_record = false;
};

/// Per-layer record / replace / inject actions consulted by every attention
/// layer of a forward pass. At most one of replace / inject per layer.
class Registry {
public:
    Registry() = default;
    explicit Registry(std::size_t n_layers);

    std::size_t layer_count() const { return hooks_.size(); }

    void record(int layer);
    void record_all(bool on = true) { record_all_ = on; }
    void suppress_record(int layer);
    void replace(int layer, ReplacementMatrix m);
    void inject(int layer, std::shared_ptr<const RecordStore> source, HookAction kind = HookAction::inject);
    /// Cross-attention map replacement is not available: the toy model has
    /// no cross-attention. Always throws RegistryError.
    void replace_cross_attention(int layer);
    void apply(const Registration& r);
    void clear();

    const LayerHook& at(int layer) const;
    bool records(int layer) const;
    bool empty() const;

    /// Copy with `m` registered on every layer in `layers`.
    Registry with_replacement(const std::vector<int>& layers, ReplacementMatrix m) const;

private:
    LayerHook& slot(int layer);
    void set_action(int layer, HookAction a);

    std::vector<LayerHook> hooks_;
    bool record_all_ = false;
};

struct HookEvent {
    int layer_index;
    HookAction action;
    int timestep;
    std::string branch;
};

/// Log of replace/inject hook firings, for tests and reports.
struct HookLog {
    std::vector<HookEvent> events;
    std::size_t count(HookAction a) const;
    std::vector<int> layers(HookAction a) const;  // sorted, unique
};

}  // namespace ieadapt
