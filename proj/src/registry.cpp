// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/registry.hpp"

#include <algorithm>

#include "ieadapt/errors.hpp"

namespace ieadapt {

AttentionMap AttentionRecord::block_map(std::size_t block) const {
    const std::size_t per = heads * n_tokens * n_tokens;
    std::vector<float> vals(maps.data().begin() + static_cast<std::ptrdiff_t>(block * per),
                            maps.data().begin() + static_cast<std::ptrdiff_t>((block + 1) * per));
    return AttentionMap{Tensor({heads, n_tokens, n_tokens}, std::move(vals)), n_tokens, mode};
}

void RecordStore::put(AttentionRecord rec) {
    Key key{rec.branch, rec.timestep, rec.layer_index};
    records_.insert_or_assign(std::move(key), std::move(rec));
}

const AttentionRecord* RecordStore::find(const std::string& branch, int timestep, int layer) const {
    auto it = records_.find(Key{branch, timestep, layer});
    return it == records_.end() ? nullptr : &it->second;
}

std::string_view to_string(HookAction a) {
    switch (a) {
        case HookAction::none: return "none";
        case HookAction::replace: return "replace";
        case HookAction::inject: return "inject";
        case HookAction::inject_kv: return "inject_kv";
        case HookAction::inject_v: return "inject_v";
    }
    return "?";
}

Registry::Registry(std::size_t n_layers) : hooks_(n_layers) {}

LayerHook& Registry::slot(int layer) {
    if (layer < 0 || static_cast<std::size_t>(layer) >= hooks_.size()) {
        throw RegistryError("unknown attention layer index " + std::to_string(layer) + " (model has " +
                            std::to_string(hooks_.size()) + " layers)");
    }
    return hooks_[static_cast<std::size_t>(layer)];
}

const LayerHook& Registry::at(int layer) const { return const_cast<Registry*>(this)->slot(layer); }

void Registry::set_action(int layer, HookAction a) {
    LayerHook& h = slot(layer);
    if (h.action != HookAction::none) {
        throw RegistryError("layer " + std::to_string(layer) + " already has a " +
                            std::string(to_string(h.action)) + " registration");
    }
    h.action = a;
}

void Registry::record(int layer) { slot(layer).record = true; }

void Registry::suppress_record(int layer) { slot(layer).suppress_record = true; }

void Registry::replace(int layer, ReplacementMatrix m) {
    if (m.kind == ReplacementKind::blend && !(m.alpha >= 0.0f && m.alpha <= 1.0f)) {
        throw DomainError("blend alpha must lie in [0,1]");
    }
    set_action(layer, HookAction::replace);
    slot(layer).matrix = m;
}

void Registry::inject(int layer, std::shared_ptr<const RecordStore> source, HookAction kind) {
    if (kind != HookAction::inject && kind != HookAction::inject_kv && kind != HookAction::inject_v) {
        throw RegistryError("inject: action must be one of inject, inject_kv, inject_v");
    }
    if (!source) throw RegistryError("inject: missing record source");
    set_action(layer, kind);
    slot(layer).source = std::move(source);
}

void Registry::replace_cross_attention(int layer) {
    slot(layer);
    throw RegistryError("cross-attention replacement is unsupported: the model has no cross-attention layers");
}

void Registry::apply(const Registration& r) {
    switch (r.action) {
        case HookAction::none: slot(r.layer_index); break;
        case HookAction::replace: replace(r.layer_index, r.matrix); break;
        default: inject(r.layer_index, r.source, r.action); break;
    }
    if (r.record) record(r.layer_index);
    if (r.suppress_record) suppress_record(r.layer_index);
}

void Registry::clear() {
    for (auto& h : hooks_) h = LayerHook{};
    record_all_ = false;
}

bool Registry::records(int layer) const {
    const LayerHook& h = at(layer);
    if (h.suppress_record) return false;
    return h.record || record_all_;
}

bool Registry::empty() const {
    if (record_all_) return false;
    return std::all_of(hooks_.begin(), hooks_.end(), [](const LayerHook& h) {
        return h.action == HookAction::none && !h.record && !h.suppress_record;
    });
}

Registry Registry::with_replacement(const std::vector<int>& layers, ReplacementMatrix m) const {
    Registry copy = *this;
    for (int l : layers) copy.replace(l, m);
    return copy;
}

std::size_t HookLog::count(HookAction a) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [a](const HookEvent& e) { return e.action == a; }));
}

std::vector<int> HookLog::layers(HookAction a) const {
    std::vector<int> out;
    for (const auto& e : events)
        if (e.action == a) out.push_back(e.layer_index);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace ieadapt
