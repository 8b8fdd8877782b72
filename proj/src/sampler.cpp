// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/sampler.hpp"

#include <cmath>
#include <sstream>

#include "ieadapt/errors.hpp"
#include "ieadapt/iead.hpp"
#include "ieadapt/ops.hpp"

namespace ieadapt {

double NoiseSchedule::alpha_bar(int t) const {
    if (t < 0 || t > train_steps) throw DomainError("timestep " + std::to_string(t) + " outside schedule");
    return alpha_bars[static_cast<std::size_t>(t)];
}

std::vector<std::pair<int, int>> NoiseSchedule::transitions() const {
    std::vector<std::pair<int, int>> out;
    for (std::size_t k = 0; k < steps.size(); ++k) out.emplace_back(steps[k], k + 1 < steps.size() ? steps[k + 1] : 0);
    return out;
}

NoiseSchedule make_schedule(int inference_steps, int train_steps, double beta_start, double beta_end) {
    if (train_steps < 1) throw DomainError("train_steps must be positive");
    if (inference_steps < 1 || inference_steps > train_steps) {
        throw DomainError("inference steps must lie in [1, train_steps]");
    }
    NoiseSchedule s;
    s.train_steps = train_steps;
    const auto n = static_cast<std::size_t>(train_steps);
    s.betas.assign(n + 1, 0.0);
    s.alphas.assign(n + 1, 1.0);
    s.alpha_bars.assign(n + 1, 1.0);
    for (std::size_t t = 1; t <= n; ++t) {
        const double frac = n > 1 ? static_cast<double>(t - 1) / static_cast<double>(n - 1) : 0.0;
        s.betas[t] = beta_start + (beta_end - beta_start) * frac;
        s.alphas[t] = 1.0 - s.betas[t];
        s.alpha_bars[t] = s.alpha_bars[t - 1] * s.alphas[t];
    }
    // Evenly spaced from T down; k * T / S rounded, distinct because S <= T.
    for (int k = inference_steps; k >= 1; --k) {
        const auto t = static_cast<int>(std::llround(static_cast<double>(k) * train_steps / inference_steps));
        s.steps.push_back(t);
    }
    return s;
}

Tensor ddim_transfer(const Tensor& x, int t_from, int t_to, const Tensor& eps, const NoiseSchedule& sched) {
    require_same_dims(x, eps, "ddim step");
    const double ab = sched.alpha_bar(t_from);
    const double ab_to = sched.alpha_bar(t_to);
    if (ab <= 0.0) throw DomainError("alpha_bar is zero at t=" + std::to_string(t_from));
    const double s_from = std::sqrt(1.0 - ab), r_from = std::sqrt(ab);
    const double s_to = std::sqrt(1.0 - ab_to), r_to = std::sqrt(ab_to);
    Tensor out(x.dims());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = (static_cast<double>(x[i]) - s_from * eps[i]) / r_from;
        out[i] = static_cast<float>(r_to * x0 + s_to * eps[i]);
    }
    return out;
}

Tensor predict_x0(const Tensor& x_t, int t, const Tensor& eps, const NoiseSchedule& sched) {
    require_same_dims(x_t, eps, "predict_x0");
    const double ab = sched.alpha_bar(t);
    if (ab <= 0.0) throw DomainError("alpha_bar is zero at t=" + std::to_string(t));
    const double s = std::sqrt(1.0 - ab), r = std::sqrt(ab);
    Tensor out(x_t.dims());
    for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = static_cast<float>((static_cast<double>(x_t[i]) - s * eps[i]) / r);
    return out;
}

Tensor ddim_step(const Tensor& x_t, int t, int t_prev, const Tensor& eps, const NoiseSchedule& sched) {
    if (!(t_prev < t)) throw DomainError("ddim_step needs t_prev < t");
    return ddim_transfer(x_t, t, t_prev, eps, sched);
}

std::string_view to_string(Combo c) {
    switch (c) {
        case Combo::none: return "none";
        case Combo::A_minus_I: return "AI";
        case Combo::U_minus_A: return "UA";
        case Combo::U_minus_I: return "UI";
    }
    return "?";
}

std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::none: return "none";
        case Strategy::eq5: return "eq5";
        case Strategy::s1: return "s1";
        case Strategy::s2: return "s2";
        case Strategy::s3: return "s3";
        case Strategy::s4: return "s4";
    }
    return "?";
}

std::string_view to_string(Branch b) {
    switch (b) {
        case Branch::uA: return "uA";
        case Branch::cA: return "cA";
        case Branch::cU: return "cU";
        case Branch::cI: return "cI";
        case Branch::uI: return "uI";
    }
    return "?";
}

Combo parse_combo(std::string_view text) {
    if (text == "none") return Combo::none;
    if (text == "AI" || text == "A_minus_I") return Combo::A_minus_I;
    if (text == "UA" || text == "U_minus_A") return Combo::U_minus_A;
    if (text == "UI" || text == "U_minus_I") return Combo::U_minus_I;
    throw ConfigError("unknown combo '" + std::string(text) + "' (expected AI, UA, UI or none)");
}

Strategy parse_strategy(std::string_view text) {
    if (text == "none" || text == "cfg") return Strategy::none;
    if (text == "eq5") return Strategy::eq5;
    if (text == "s1") return Strategy::s1;
    if (text == "s2") return Strategy::s2;
    if (text == "s3") return Strategy::s3;
    if (text == "s4") return Strategy::s4;
    throw ConfigError("unknown strategy '" + std::string(text) + "'");
}

void GuidanceSpec::validate() const {
    if (strategy == Strategy::eq5 && combo == Combo::none) throw SpecError("strategy eq5 needs a combo");
    if (!std::isfinite(omega) || !std::isfinite(lambda)) throw SpecError("omega and lambda must be finite");
}

namespace {

std::pair<Branch, Branch> combo_branches(Combo c) {
    switch (c) {
        case Combo::A_minus_I: return {Branch::cA, Branch::cI};
        case Combo::U_minus_A: return {Branch::cU, Branch::cA};
        case Combo::U_minus_I: return {Branch::cU, Branch::cI};
        case Combo::none: break;
    }
    throw SpecError("combo none has no branch pair");
}

}  // namespace

std::vector<Branch> GuidanceSpec::required_branches() const {
    validate();
    bool need[5] = {};
    auto want = [&](Branch b) { need[static_cast<int>(b)] = true; };
    const bool cfg_needs_uncond = omega != 1.0;
    switch (strategy) {
        case Strategy::none:
            want(Branch::cA);
            if (cfg_needs_uncond) want(Branch::uA);
            break;
        case Strategy::eq5: {
            want(Branch::cA);
            if (cfg_needs_uncond) want(Branch::uA);
            if (lambda != 0.0) {
                auto [pos, neg] = combo_branches(combo);
                want(pos);
                want(neg);
            }
            break;
        }
        case Strategy::s1:
            want(Branch::uA);
            want(Branch::cA);
            want(Branch::uI);
            break;
        case Strategy::s2:
            want(Branch::cA);
            if (cfg_needs_uncond) want(Branch::uA);
            if (lambda != 0.0) want(Branch::cI);
            break;
        case Strategy::s3:
            want(Branch::uA);
            want(Branch::cU);
            if (lambda != 0.0) {
                want(Branch::cA);
                want(Branch::cI);
            }
            break;
        case Strategy::s4:
            want(Branch::uA);
            want(Branch::cU);
            break;
    }
    std::vector<Branch> out;
    for (int b = 0; b < 5; ++b)
        if (need[b]) out.push_back(static_cast<Branch>(b));
    return out;
}

std::optional<Tensor>& BranchSet::get(Branch b) {
    switch (b) {
        case Branch::uA: return uA;
        case Branch::cA: return cA;
        case Branch::cU: return cU;
        case Branch::cI: return cI;
        case Branch::uI: return uI;
    }
    throw SpecError("bad branch");
}

const std::optional<Tensor>& BranchSet::get(Branch b) const { return const_cast<BranchSet*>(this)->get(b); }

Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double omega) {
    require_same_dims(eps_cond, eps_uncond, "cfg_combine");
    if (omega == 1.0) return eps_cond;
    const auto w = static_cast<float>(omega);
    Tensor out(eps_cond.dims());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps_uncond[i] + w * (eps_cond[i] - eps_uncond[i]);
    return out;
}

namespace {

const Tensor& need(const BranchSet& b, Branch which) {
    const auto& t = b.get(which);
    if (!t) throw SpecError("guidance needs branch " + std::string(to_string(which)) + " which was not evaluated");
    return *t;
}

// out += l * (pos - neg)
void add_scaled_difference(Tensor& out, float l, const Tensor& pos, const Tensor& neg) {
    require_same_dims(out, pos, "guidance");
    require_same_dims(out, neg, "guidance");
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] + l * (pos[i] - neg[i]);
}

}  // namespace

Tensor ie_guidance_combine(const BranchSet& b, const GuidanceSpec& spec) {
    spec.validate();
    const auto w = static_cast<float>(spec.omega);
    const auto l = static_cast<float>(spec.lambda);
    auto base_cfg = [&] {
        if (spec.omega == 1.0) return need(b, Branch::cA);
        return cfg_combine(need(b, Branch::cA), need(b, Branch::uA), spec.omega);
    };
    switch (spec.strategy) {
        case Strategy::none: return base_cfg();
        case Strategy::eq5: {
            Tensor out = base_cfg();
            if (spec.lambda != 0.0) {
                auto [pos, neg] = combo_branches(spec.combo);
                add_scaled_difference(out, l, need(b, pos), need(b, neg));
            }
            return out;
        }
        case Strategy::s1: {
            const Tensor& ua = need(b, Branch::uA);
            const Tensor& ca = need(b, Branch::cA);
            const Tensor& ui = need(b, Branch::uI);
            require_same_dims(ua, ca, "s1");
            require_same_dims(ua, ui, "s1");
            Tensor out(ua.dims());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = ua[i] + w * (ca[i] - ui[i]);
            return out;
        }
        case Strategy::s2: {
            Tensor out = base_cfg();
            if (spec.lambda != 0.0) add_scaled_difference(out, l, need(b, Branch::cA), need(b, Branch::cI));
            return out;
        }
        case Strategy::s3:
        case Strategy::s4: {
            const Tensor& ua = need(b, Branch::uA);
            const Tensor& cu = need(b, Branch::cU);
            require_same_dims(ua, cu, "s3/s4");
            Tensor out(ua.dims());
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = ua[i] + w * (cu[i] - ua[i]);
            if (spec.strategy == Strategy::s3 && spec.lambda != 0.0) {
                add_scaled_difference(out, l, need(b, Branch::cA), need(b, Branch::cI));
            }
            return out;
        }
    }
    throw SpecError("unknown strategy");
}

StepOutput guided_eps(const ToyVDM& model, const Tensor& x, int t, const ConditionPair& conds,
                      const GuidanceSpec& spec, const Registry& base, const std::vector<int>& guidance_layers,
                      bool record, bool capture_outputs, bool capture_kv, HookLog* log) {
    StepOutput out;
    const VideoLatent latent{x, t};
    for (Branch br : spec.required_branches()) {
        const bool uncond = br == Branch::uA || br == Branch::uI;
        std::optional<Registry> view;
        if (br == Branch::cU) {
            view = base.with_replacement(guidance_layers, ReplacementMatrix::uniform());
        } else if (br == Branch::cI || br == Branch::uI) {
            view = base.with_replacement(guidance_layers, ReplacementMatrix::identity());
        }
        Registry rec_view = view ? *view : base;
        if (record) rec_view.record_all(true);
        ForwardHooks hooks;
        hooks.registry = &rec_view;
        hooks.branch = std::string(to_string(br));
        hooks.capture_outputs = capture_outputs;
        hooks.capture_kv = capture_kv;
        hooks.log = log;
        NoiseEstimate est = predict_noise(model, latent, uncond ? conds.uncond : conds.cond, hooks);
        out.branches.get(br) = std::move(est.eps);
        for (auto& r : est.records) out.records.push_back(std::move(r));
    }
    out.eps = ie_guidance_combine(out.branches, spec);
    return out;
}

Tensor initial_noise(const ModelConfig& cfg, std::uint64_t seed) {
    SeededRng rng = SeededRng(seed).derive("latent.z_T");
    return gaussian(rng, cfg.latent_dims());
}

SampleResult sample(const ToyVDM& model, const std::string& prompt, const std::string& neg_prompt,
                    std::uint64_t seed, const NoiseSchedule& sched, const GuidanceSpec& guidance,
                    const SamplePlan& plan) {
    const std::size_t d = model.config.channels;
    ConditionPair conds{embed_prompt(prompt, d), embed_prompt(neg_prompt, d)};
    return sample_from(model, initial_noise(model.config, seed), conds, sched, guidance, plan);
}

SampleResult sample_from(const ToyVDM& model, const Tensor& x_T, const ConditionPair& conds,
                         const NoiseSchedule& sched, const GuidanceSpec& guidance, const SamplePlan& plan) {
    guidance.validate();
    const Registry base = plan.registry ? *plan.registry : model.make_registry();
    SampleResult result;
    Tensor x = x_T;
    std::size_t k = 0;
    for (auto [t, t_prev] : sched.transitions()) {
        const bool record = plan.record == RecordPolicy::all_steps || (plan.record == RecordPolicy::first_step && k == 0);
        StepOutput step = guided_eps(model, x, t, conds, guidance, base, plan.guidance_layers, record,
                                     plan.capture_outputs, plan.capture_kv, plan.log);
        if (plan.trace_dir) {
            std::ostringstream stem;
            stem << "step" << k << "_t" << t;
            iead::save(*plan.trace_dir / (stem.str() + "_latent.iead"), x);
            for (Branch br : {Branch::uA, Branch::cA, Branch::cU, Branch::cI, Branch::uI}) {
                if (const auto& e = step.branches.get(br))
                    iead::save(*plan.trace_dir / (stem.str() + "_eps_" + std::string(to_string(br)) + ".iead"), *e);
            }
            iead::save(*plan.trace_dir / (stem.str() + "_eps_guided.iead"), step.eps);
        }
        x = ddim_step(x, t, t_prev, step.eps, sched);
        for (auto& r : step.records) {
            if (plan.store) plan.store->put(r);
            result.records.push_back(std::move(r));
        }
        ++k;
    }
    if (!x.all_finite()) throw Error("sampling produced non-finite values");
    result.x0 = std::move(x);
    return result;
}

std::vector<Tensor> ddim_invert(const ToyVDM& model, const Tensor& x0, const Condition& cond,
                                const NoiseSchedule& sched, const ForwardHooks& hooks) {
    if (!x0.all_finite()) throw DomainError("ddim_invert: non-finite input latent");
    std::vector<Tensor> traj{x0};
    Tensor x = x0;
    int t_cur = 0;
    for (auto it = sched.steps.rbegin(); it != sched.steps.rend(); ++it) {
        const int t_next = *it;
        NoiseEstimate est = predict_noise(model, VideoLatent{x, t_next}, cond, hooks);
        x = ddim_transfer(x, t_cur, t_next, est.eps, sched);
        traj.push_back(x);
        t_cur = t_next;
    }
    return traj;
}

}  // namespace ieadapt
