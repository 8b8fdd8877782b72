// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/adapt.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "ieadapt/errors.hpp"

namespace ieadapt {

std::string_view to_string(ProbePolicy p) { return p == ProbePolicy::first_step ? "first" : "mean"; }

ProbePolicy parse_probe_policy(std::string_view text) {
    if (text == "first" || text == "first_step") return ProbePolicy::first_step;
    if (text == "mean" || text == "mean_over_steps") return ProbePolicy::mean_over_steps;
    throw ConfigError("unknown probe policy '" + std::string(text) + "'");
}

std::string_view to_string(LayerPolicy p) {
    switch (p) {
        case LayerPolicy::entropy: return "entropy";
        case LayerPolicy::tokenflow: return "tokenflow";
        case LayerPolicy::explicit_set: return "explicit";
    }
    return "?";
}

std::string_view to_string(InjectKind k) {
    switch (k) {
        case InjectKind::map: return "map";
        case InjectKind::kv: return "kv";
        case InjectKind::value: return "value";
    }
    return "?";
}

LayerPolicy parse_layer_policy(std::string_view text) {
    if (text == "entropy") return LayerPolicy::entropy;
    if (text == "tokenflow") return LayerPolicy::tokenflow;
    if (text == "explicit") return LayerPolicy::explicit_set;
    throw ConfigError("unknown layer policy '" + std::string(text) + "'");
}

InjectKind parse_inject_kind(std::string_view text) {
    if (text == "map") return InjectKind::map;
    if (text == "kv") return InjectKind::kv;
    if (text == "value") return InjectKind::value;
    if (text == "p2p") {
        throw ConfigError("cross-attention (p2p) injection is unsupported: the model has no cross-attention");
    }
    throw ConfigError("unknown inject kind '" + std::string(text) + "'");
}

LayerStats layer_stats(const AttentionRecord& rec) {
    LayerStats s;
    s.layer_index = rec.layer_index;
    s.mode = rec.mode;
    s.n_tokens = rec.n_tokens;
    s.timestep = rec.timestep;
    const std::size_t nn = rec.n_tokens * rec.n_tokens;
    const std::size_t units = rec.blocks * rec.heads;
    double h = 0.0, e = 0.0;
    for (std::size_t u = 0; u < units; ++u) {
        const auto slice = rec.maps.data().subspan(u * nn, nn);
        h += slice_entropy(slice);
        e += energy(slice);
    }
    s.entropy = units ? h / static_cast<double>(units) : 0.0;
    s.energy_map = units ? e / static_cast<double>(units) : 0.0;
    s.entropy_pct = entropy_pct(s.entropy, rec.n_tokens);
    double eo = 0.0;
    for (double v : rec.energy_av) eo += v;
    s.energy_out = eo;
    return s;
}

std::vector<LayerStats> probe_entropy(const ToyVDM& model, const Tensor& x_T, const ConditionPair& conds,
                                      const NoiseSchedule& sched, ProbePolicy policy, double omega,
                                      const Registry* base) {
    Registry reg = base ? *base : model.make_registry();
    reg.record_all(true);
    if (policy == ProbePolicy::first_step) {
        ForwardHooks hooks;
        hooks.registry = &reg;
        hooks.branch = "cA";
        NoiseEstimate est = predict_noise(model, VideoLatent{x_T, sched.steps.front()}, conds.cond, hooks);
        std::vector<LayerStats> out;
        for (const auto& r : est.records) out.push_back(layer_stats(r));
        return out;
    }

    SamplePlan plan;
    plan.registry = base ? *base : model.make_registry();
    plan.record = RecordPolicy::all_steps;
    GuidanceSpec cfg;
    cfg.omega = omega;
    SampleResult run = sample_from(model, x_T, conds, sched, cfg, plan);
    std::vector<LayerStats> mean(model.layer_count());
    std::vector<std::size_t> count(model.layer_count(), 0);
    for (const auto& r : run.records) {
        if (r.branch != "cA") continue;
        const LayerStats s = layer_stats(r);
        auto& m = mean[static_cast<std::size_t>(s.layer_index)];
        const std::size_t c = count[static_cast<std::size_t>(s.layer_index)]++;
        if (c == 0) {
            m = s;
            continue;
        }
        m.entropy += s.entropy;
        m.entropy_pct += s.entropy_pct;
        m.energy_map += s.energy_map;
        m.energy_out += s.energy_out;
    }
    for (std::size_t l = 0; l < mean.size(); ++l) {
        if (count[l] == 0) continue;
        const auto c = static_cast<double>(count[l]);
        mean[l].entropy /= c;
        mean[l].entropy_pct /= c;
        mean[l].energy_map /= c;
        mean[l].energy_out /= c;
        mean[l].timestep = -1;  // averaged over steps
    }
    std::vector<LayerStats> out;
    for (std::size_t l = 0; l < mean.size(); ++l)
        if (count[l]) out.push_back(mean[l]);
    return out;
}

std::vector<LayerStats> probe_entropy(const ToyVDM& model, const std::string& prompt, std::uint64_t seed,
                                      const NoiseSchedule& sched, ProbePolicy policy, double omega) {
    const std::size_t d = model.config.channels;
    ConditionPair conds{embed_prompt(prompt, d), Condition::null(d)};
    return probe_entropy(model, initial_noise(model.config, seed), conds, sched, policy, omega);
}

EnhanceResult enhance(const ToyVDM& model, const std::string& prompt, std::uint64_t seed,
                      const NoiseSchedule& sched, const GuidanceSpec& spec, ProbePolicy policy, HookLog* log) {
    spec.validate();
    EnhanceResult r;
    r.probe = probe_entropy(model, prompt, seed, sched, policy, spec.omega);
    r.layer = select_max(r.probe);
    SamplePlan plan;
    plan.guidance_layers = {r.layer};
    plan.log = log;
    r.x0 = sample(model, prompt, "", seed, sched, spec, plan).x0;
    return r;
}

std::vector<int> tokenflow_layers(const ToyVDM& model) {
    std::vector<int> out;
    for (const auto& l : model.layers)
        if (l.stage == Stage::decoder) out.push_back(l.index);
    return out;
}

EditResult edit_from(const ToyVDM& model, const Tensor& x_T, const ConditionPair& src, const ConditionPair& dst,
                     const NoiseSchedule& sched, const EditConfig& cfg, double omega) {
    EditResult r;
    switch (cfg.layer_policy) {
        case LayerPolicy::entropy:
            r.probe = cfg.probe_stats.empty() ? probe_entropy(model, x_T, src, sched, cfg.probe, omega)
                                              : cfg.probe_stats;
            r.layers = select_bottom_fraction(r.probe, cfg.rho);
            break;
        case LayerPolicy::tokenflow: r.layers = tokenflow_layers(model); break;
        case LayerPolicy::explicit_set: r.layers = cfg.layers; break;
    }
    if (r.layers.empty()) throw DomainError("edit: no layers selected for injection");

    const HookAction action = cfg.inject == InjectKind::map  ? HookAction::inject
                              : cfg.inject == InjectKind::kv ? HookAction::inject_kv
                                                             : HookAction::inject_v;
    auto store = std::make_shared<RecordStore>();
    Registry src_reg = model.make_registry();
    Registry dst_reg = model.make_registry();
    for (int l : r.layers) {
        src_reg.record(l);
        dst_reg.inject(l, store, action);
    }
    GuidanceSpec guidance;
    guidance.omega = omega;
    const bool need_kv = cfg.inject != InjectKind::map;

    Tensor x = x_T, x_hat = x_T;
    for (auto [t, t_prev] : sched.transitions()) {
        StepOutput s = guided_eps(model, x, t, src, guidance, src_reg, {}, false, false, need_kv, nullptr);
        store->clear();
        for (auto& rec : s.records) store->put(std::move(rec));
        StepOutput d = guided_eps(model, x_hat, t, dst, guidance, dst_reg, {}, false, false, false, &r.log);
        x = ddim_step(x, t, t_prev, s.eps, sched);
        x_hat = ddim_step(x_hat, t, t_prev, d.eps, sched);
    }
    r.src_latent = std::move(x);
    r.dst_latent = std::move(x_hat);
    r.src_video = decode(model, r.src_latent);
    r.dst_video = decode(model, r.dst_latent);
    return r;
}

EditResult edit_generated(const ToyVDM& model, const std::string& src_prompt, const std::string& dst_prompt,
                          std::uint64_t seed, const NoiseSchedule& sched, const EditConfig& cfg) {
    if (src_prompt.empty() || dst_prompt.empty()) throw DomainError("edit prompts must be non-empty");
    const std::size_t d = model.config.channels;
    const ConditionPair src{embed_prompt(src_prompt, d), Condition::null(d)};
    const ConditionPair dst{embed_prompt(dst_prompt, d), Condition::null(d)};
    return edit_from(model, initial_noise(model.config, seed), src, dst, sched, cfg, cfg.omega);
}

EditResult edit_real(const ToyVDM& model, const Tensor& x0, const std::string& src_prompt,
                     const std::string& dst_prompt, const NoiseSchedule& sched, const EditConfig& cfg) {
    if (src_prompt.empty() || dst_prompt.empty()) throw DomainError("edit prompts must be non-empty");
    const std::size_t d = model.config.channels;
    const ConditionPair src{embed_prompt(src_prompt, d), Condition::null(d)};
    const ConditionPair dst{embed_prompt(dst_prompt, d), Condition::null(d)};
    const std::vector<Tensor> traj = ddim_invert(model, x0, src.cond, sched);
    return edit_from(model, traj.back(), src, dst, sched, cfg, cfg.real_omega);
}

void write_edit_manifest(const std::filesystem::path& path, const EditResult& r, const EditConfig& cfg,
                         const std::string& src_prompt, const std::string& dst_prompt, std::uint64_t seed,
                         const NoiseSchedule& sched, const std::string& source_kind) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw IoError("cannot write " + path.string());
    os << "source=" << source_kind << '\n'
       << "seed=" << seed << '\n'
       << "src_prompt=" << src_prompt << '\n'
       << "dst_prompt=" << dst_prompt << '\n'
       << "rho=" << cfg.rho << '\n'
       << "probe_policy=" << to_string(cfg.probe) << '\n'
       << "layer_policy=" << to_string(cfg.layer_policy) << '\n'
       << "inject=" << to_string(cfg.inject) << '\n'
       << "omega=" << (source_kind == "real" ? cfg.real_omega : cfg.omega) << '\n'
       << "layers=";
    for (std::size_t i = 0; i < r.layers.size(); ++i) os << (i ? "," : "") << r.layers[i];
    os << '\n' << "schedule.train_steps=" << sched.train_steps << '\n' << "schedule.steps=";
    for (std::size_t i = 0; i < sched.steps.size(); ++i) os << (i ? "," : "") << sched.steps[i];
    os << '\n';
}

}  // namespace ieadapt
