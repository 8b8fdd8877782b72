// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "ieadapt/errors.hpp"
#include "ieadapt/iead.hpp"
#include "ieadapt/kernels.hpp"
#include "ieadapt/rng.hpp"

namespace ieadapt {
namespace fs = std::filesystem;

std::string_view to_string(SweepKind k) {
    switch (k) {
        case SweepKind::single_layer: return "single";
        case SweepKind::multi_layer: return "multi";
        case SweepKind::blend: return "blend";
        case SweepKind::strategy: return "strategy";
        case SweepKind::rho: return "rho";
    }
    return "?";
}

SweepKind parse_sweep_kind(std::string_view text) {
    if (text == "single" || text == "single_layer") return SweepKind::single_layer;
    if (text == "multi" || text == "multi_layer") return SweepKind::multi_layer;
    if (text == "blend") return SweepKind::blend;
    if (text == "strategy") return SweepKind::strategy;
    if (text == "rho") return SweepKind::rho;
    throw ConfigError("unknown sweep kind '" + std::string(text) + "'");
}

const std::vector<std::string>& default_prompts() {
    static const std::vector<std::string> prompts = {
        "a red fox running through fresh snow",
        "waves crashing on a rocky shore at dusk",
        "a paper boat drifting down a rainy street",
        "an astronaut riding a horse on the moon",
        "a hummingbird hovering near a purple flower",
        "city traffic at night seen from above",
        "a candle flame flickering in a dark room",
        "a golden retriever catching a frisbee",
        "clouds rolling over a mountain ridge",
        "a cup of coffee with rising steam",
        "a skateboarder gliding down an empty ramp",
        "autumn leaves falling in a quiet park",
        "a jellyfish pulsing in deep blue water",
        "a windmill turning in a wheat field",
        "fireworks bursting over a harbor",
        "a cat stretching on a sunny windowsill",
        "a steam train crossing a stone bridge",
        "raindrops sliding down a window pane",
    };
    return prompts;
}

std::vector<std::string> read_prompts(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read prompt file " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        const auto a = line.find_first_not_of(" \t\r");
        if (a == std::string::npos || line[a] == '#') continue;
        const auto b = line.find_last_not_of(" \t\r");
        out.push_back(line.substr(a, b - a + 1));
    }
    if (out.empty()) throw ConfigError("prompt file " + path.string() + " has no prompts");
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string hex16(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string join(const std::vector<int>& v, char sep = ';') {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + std::to_string(v[i]);
    return s;
}

std::pair<std::string, std::string> split_pair(const std::string& p) {
    const auto bar = p.find('|');
    if (bar == std::string::npos) throw ConfigError("rho sweep prompts must be 'source|target': " + p);
    return {p.substr(0, bar), p.substr(bar + 1)};
}

std::string model_fingerprint(const ToyVDM& model) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& [name, t] : named_tensors(model)) {
        h ^= fnv1a64(name);
        h *= 1099511628211ULL;
        const auto bytes = iead::encode(*t);
        h ^= fnv1a64(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
        h *= 1099511628211ULL;
    }
    return hex16(h);
}

std::string mode_set(const ToyVDM& model, const std::vector<int>& layers) {
    std::set<std::string> modes;
    for (int l : layers)
        if (l >= 0 && static_cast<std::size_t>(l) < model.layer_count())
            modes.insert(std::string(to_string(model.layers[static_cast<std::size_t>(l)].mode)));
    std::string s;
    for (const auto& m : modes) s += (s.empty() ? "" : ";") + m;
    return s;
}

double mean_entropy_pct(const std::vector<AttentionRecord>& records, const std::string& branch) {
    double acc = 0.0;
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.branch != branch) continue;
        acc += layer_stats(r).entropy_pct;
        ++n;
    }
    return n ? acc / static_cast<double>(n) : 0.0;
}

std::string strategy_label(const GuidanceSpec& g) {
    std::ostringstream os;
    os << to_string(g.strategy);
    if (g.strategy == Strategy::eq5) os << ':' << to_string(g.combo);
    os << ":l=" << fmt(g.lambda);
    return os.str();
}

// One (prompt, seed) pair with its shared baseline.
struct Pair {
    std::size_t prompt_index = 0;
    std::string prompt, target;  // target is set for rho sweeps
    std::uint64_t seed = 0;
    Tensor baseline;
    std::vector<LayerStats> probe;
};

struct Job {
    std::size_t pair = 0;
    std::vector<int> layers;
    std::string matrix;
    std::optional<ReplacementMatrix> replacement;
    std::optional<GuidanceSpec> guidance;
    double alpha = 0.0;
    std::string run_id;
};

void run_pool(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex mu;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            kernels::set_threads(1);
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

void SweepSpec::validate() const {
    if (steps < 1) throw ConfigError("steps must be >= 1");
    if (seeds.empty()) throw ConfigError("sweep needs at least one seed");
    switch (kind) {
        case SweepKind::single_layer:
        case SweepKind::multi_layer:
            if (matrices.empty()) throw ConfigError("sweep needs at least one matrix");
            for (char m : matrices)
                if (m != 'I' && m != 'U') throw ConfigError(std::string("unknown matrix '") + m + "'");
            if (kind == SweepKind::multi_layer && combos.empty()) throw ConfigError("multi-layer sweep needs combos");
            break;
        case SweepKind::blend:
            if (alphas.empty()) throw ConfigError("blend sweep needs alphas");
            for (double a : alphas)
                if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("blend alpha outside [0, 1]");
            break;
        case SweepKind::strategy:
            if (strategies.empty()) throw ConfigError("strategy sweep needs strategies");
            for (const auto& s : strategies) s.validate();
            break;
        case SweepKind::rho:
            if (rhos.empty()) throw ConfigError("rho sweep needs rhos");
            for (double r : rhos)
                if (!(r > 0.0 && r <= 1.0)) throw ConfigError("rho outside (0, 1]");
            for (const auto& p : prompts) split_pair(p);
            if (prompts.empty()) throw ConfigError("rho sweep needs 'source|target' prompts");
            break;
    }
}

std::string SweepSpec::canonical() const {
    std::vector<std::string> lines;
    auto add = [&](const std::string& k, const std::string& v) { lines.push_back(k + "=" + v); };
    add("kind", std::string(to_string(kind)));
    std::string s;
    for (const auto& p : prompts) s += p + "\n";
    add("prompts", hex16(fnv1a64(s)));
    s.clear();
    for (char m : matrices) s += m;
    add("matrices", s);
    s.clear();
    for (double a : alphas) s += fmt(a) + ";";
    add("alphas", s);
    add("layers", join(layers));
    s.clear();
    for (const auto& c : combos) s += c + ",";
    add("combos", s);
    s.clear();
    for (const auto& g : strategies) s += strategy_label(g) + ",";
    add("strategies", s);
    s.clear();
    for (double r : rhos) s += fmt(r) + ";";
    add("rhos", s);
    s.clear();
    for (auto sd : seeds) s += std::to_string(sd) + ";";
    add("seeds", s);
    add("omega", fmt(omega));
    add("steps", std::to_string(steps));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& l : lines) out += l + "\n";
    return out;
}

std::string SweepSpec::hash() const { return hex16(fnv1a64(canonical())); }

std::vector<int> resolve_layer_set(const std::string& name, const ToyVDM& model,
                                   const std::vector<LayerStats>& probe) {
    std::vector<int> out;
    const std::size_t n = model.layer_count();
    if (name == "top50_entropy" || name == "bottom50_entropy") {
        if (probe.empty()) throw DomainError("entropy presets need a probe");
        const std::vector<int> bottom = select_bottom_fraction(probe, 0.5);
        if (name == "bottom50_entropy") return bottom;
        for (std::size_t l = 0; l < n; ++l)
            if (!std::binary_search(bottom.begin(), bottom.end(), static_cast<int>(l)))
                out.push_back(static_cast<int>(l));
        return out;
    }
    for (const auto& info : model.layers) {
        if ((name == "encoder_layers" && info.stage == Stage::encoder) ||
            (name == "decoder_layers" && info.stage == Stage::decoder) ||
            (name == "spatial_only" && info.mode == AttentionMode::spatial) ||
            (name == "temporal_only" && info.mode == AttentionMode::temporal)) {
            out.push_back(info.index);
        }
    }
    if (name == "encoder_layers" || name == "decoder_layers" || name == "spatial_only" || name == "temporal_only") {
        if (out.empty()) throw ConfigError("layer preset '" + name + "' is empty for this model");
        return out;
    }
    std::stringstream ss(name);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
        std::stringstream inner(tok);
        std::string part;
        while (std::getline(inner, part, ',')) {
            if (part.empty()) continue;
            std::size_t pos = 0;
            int v = 0;
            try {
                v = std::stoi(part, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != part.size()) throw ConfigError("unknown layer set '" + name + "'");
            if (v < 0 || static_cast<std::size_t>(v) >= n)
                throw ConfigError("layer " + part + " outside [0, " + std::to_string(n) + ")");
            out.push_back(v);
        }
    }
    if (out.empty()) throw ConfigError("empty layer set '" + name + "'");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<RunRecord> run_sweep(const SweepSpec& spec_in, const ToyVDM& model, const NoiseSchedule& sched,
                                 const SweepOptions& opts, SweepStats* stats) {
    SweepSpec spec = spec_in;
    if (spec.prompts.empty()) spec.prompts = default_prompts();
    spec.validate();
    const std::string spec_hash = spec.hash();
    const std::string fp = model_fingerprint(model);
    const bool persist = !opts.out_dir.empty();
    if (persist) {
        fs::create_directories(opts.out_dir / "runs");
        fs::create_directories(opts.out_dir / "baselines");
    }
    SweepStats local;
    const bool rho = spec.kind == SweepKind::rho;
    const bool need_probe = spec.kind == SweepKind::strategy ||
                            (spec.kind == SweepKind::multi_layer &&
                             std::any_of(spec.combos.begin(), spec.combos.end(), [](const std::string& c) {
                                 return c == "top50_entropy" || c == "bottom50_entropy";
                             }));

    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < spec.prompts.size(); ++p) {
        for (auto seed : spec.seeds) {
            Pair pr;
            pr.prompt_index = p;
            if (rho) {
                std::tie(pr.prompt, pr.target) = split_pair(spec.prompts[p]);
            } else {
                pr.prompt = spec.prompts[p];
            }
            pr.seed = seed;
            pairs.push_back(std::move(pr));
        }
    }

    GuidanceSpec cfg_guidance;
    cfg_guidance.omega = spec.omega;
    std::mutex stats_mu;
    run_pool(pairs.size(), opts.workers, [&](std::size_t i) {
        Pair& pr = pairs[i];
        const std::string key = hex16(fnv1a64(fp + "|" + std::to_string(spec.steps) + "|" + fmt(spec.omega) + "|" +
                                              pr.prompt + "|" + std::to_string(pr.seed)));
        const fs::path cache = opts.out_dir / "baselines" / ("b" + key + ".iead");
        if (persist && fs::exists(cache)) {
            pr.baseline = iead::load(cache);
        } else {
            pr.baseline = decode(model, sample(model, pr.prompt, "", pr.seed, sched, cfg_guidance).x0);
            if (persist) iead::save(cache, pr.baseline);
            std::lock_guard<std::mutex> lock(stats_mu);
            ++local.baselines;
        }
        if (need_probe) pr.probe = probe_entropy(model, pr.prompt, pr.seed, sched, ProbePolicy::first_step, spec.omega);
    });

    std::vector<Job> jobs;
    auto push = [&](Job j) {
        const Pair& pr = pairs[j.pair];
        std::ostringstream d;
        d << fp << '|' << spec.steps << '|' << fmt(spec.omega) << '|' << to_string(spec.kind) << '|' << pr.prompt
          << '|' << pr.target << '|' << pr.seed << '|' << join(j.layers) << '|' << j.matrix << '|' << fmt(j.alpha);
        j.run_id = "r" + hex16(fnv1a64(d.str()));
        jobs.push_back(std::move(j));
    };
    const std::vector<int> all_layers = [&] {
        std::vector<int> v;
        for (const auto& info : model.layers) v.push_back(info.index);
        return v;
    }();
    const std::vector<int>& targets = spec.layers.empty() ? all_layers : spec.layers;
    for (int l : targets)
        if (l < 0 || static_cast<std::size_t>(l) >= model.layer_count())
            throw ConfigError("layer " + std::to_string(l) + " outside the model");

    for (std::size_t p = 0; p < pairs.size(); ++p) {
        switch (spec.kind) {
            case SweepKind::single_layer:
                for (int l : targets)
                    for (char m : spec.matrices)
                        push({p, {l}, std::string(1, m),
                              m == 'I' ? ReplacementMatrix::identity() : ReplacementMatrix::uniform(), {},
                              m == 'I' ? 1.0 : 0.0, {}});
                break;
            case SweepKind::multi_layer:
                for (const auto& c : spec.combos) {
                    const auto layers = resolve_layer_set(c, model, pairs[p].probe);
                    for (char m : spec.matrices)
                        push({p, layers, std::string(1, m),
                              m == 'I' ? ReplacementMatrix::identity() : ReplacementMatrix::uniform(), {},
                              m == 'I' ? 1.0 : 0.0, {}});
                }
                break;
            case SweepKind::blend:
                for (int l : targets)
                    for (double a : spec.alphas) push({p, {l}, "blend", ReplacementMatrix::blend(a), {}, a, {}});
                break;
            case SweepKind::strategy:
                for (const auto& g : spec.strategies)
                    push({p, {select_max(pairs[p].probe)}, strategy_label(g), {}, g, 0.0, {}});
                break;
            case SweepKind::rho:
                for (double r : spec.rhos) push({p, {}, "rho", {}, {}, r, {}});
                break;
        }
    }

    std::vector<RunRecord> out(jobs.size());
    std::vector<char> done(jobs.size(), 0);
    {
        std::set<std::string> ids;
        for (const auto& j : jobs)
            if (!ids.insert(j.run_id).second) throw ConfigError("sweep contains duplicate runs");
    }
    if (persist) {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            const fs::path f = opts.out_dir / "runs" / (jobs[i].run_id + ".csv");
            if (!fs::exists(f)) continue;
            std::ifstream is(f);
            std::string header, row;
            if (!std::getline(is, header) || !std::getline(is, row)) continue;
            try {
                out[i] = parse_report_row(row);
            } catch (const Error&) {
                continue;  // damaged file: rerun
            }
            if (out[i].run_id != jobs[i].run_id || out[i].status != "ok") continue;
            done[i] = 1;
            ++local.resumed;
        }
    }

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (!done[i]) todo.push_back(i);

    run_pool(todo.size(), opts.workers, [&](std::size_t k) {
        const Job& j = jobs[todo[k]];
        const Pair& pr = pairs[j.pair];
        RunRecord r;
        r.run_id = j.run_id;
        r.seed = pr.seed;
        r.matrix = j.matrix;
        r.alpha = j.alpha;
        char pid[16];
        std::snprintf(pid, sizeof pid, "p%02zu", pr.prompt_index);
        r.prompt_id = pid;
        try {
            Tensor video;
            std::vector<int> layers = j.layers;
            if (spec.kind == SweepKind::rho) {
                EditConfig ec;
                ec.rho = j.alpha;
                ec.omega = spec.omega;
                EditResult er = edit_generated(model, pr.prompt, pr.target, pr.seed, sched, ec);
                layers = er.layers;
                double acc = 0.0;
                for (const auto& s : er.probe)
                    if (std::binary_search(layers.begin(), layers.end(), s.layer_index)) acc += s.entropy_pct;
                r.entropy_pct_mean = layers.empty() ? 0.0 : acc / static_cast<double>(layers.size());
                video = std::move(er.dst_video);
            } else {
                SamplePlan plan;
                plan.record = RecordPolicy::first_step;
                GuidanceSpec g = cfg_guidance;
                if (j.replacement) {
                    Registry reg = model.make_registry();
                    for (int l : layers) reg.replace(l, *j.replacement);
                    plan.registry = std::move(reg);
                } else if (j.guidance) {
                    g = *j.guidance;
                    plan.guidance_layers = layers;
                }
                SampleResult res = sample(model, pr.prompt, "", pr.seed, sched, g, plan);
                r.entropy_pct_mean = mean_entropy_pct(res.records, "cA");
                video = decode(model, res.x0);
            }
            r.layer_set = join(layers);
            r.mode_set = mode_set(model, layers);
            r.metrics = compare(pr.baseline, video);
        } catch (const std::exception& e) {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            r.status = "error: " + msg;
            r.layer_set = join(j.layers);
            r.mode_set = mode_set(model, j.layers);
            const double nan = std::nan("");
            r.metrics.ssim = r.metrics.mse = r.metrics.motion_magnitude = r.metrics.motion_smoothness =
                r.metrics.subject_consistency = r.metrics.sharpness = nan;
            r.entropy_pct_mean = nan;
        }
        out[todo[k]] = std::move(r);
        if (persist) {
            const fs::path f = opts.out_dir / "runs" / (j.run_id + ".csv");
            const fs::path tmp = f.string() + ".tmp";
            {
                std::ofstream os(tmp);
                os << report_header() << '\n' << report_row(out[todo[k]]) << '\n';
            }
            fs::rename(tmp, f);
        }
    });
    local.executed = todo.size();

    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const Pair& pr = pairs[jobs[i].pair];
        char id[16];
        std::snprintf(id, sizeof id, "p%02zu", pr.prompt_index);
        out[i].prompt_id = id;
        out[i].prompt = rho ? pr.prompt + "|" + pr.target : pr.prompt;
        out[i].spec_hash = spec_hash;
        out[i].metrics.baseline_run_id = std::string("base-") + id + "-s" + std::to_string(pr.seed);
        out[i].metrics.perturbed_run_id = out[i].run_id;
    }
    if (stats) *stats = local;
    return out;
}

std::vector<EntropyRow> entropy_report(const ToyVDM& model, const std::vector<std::string>& prompts_in,
                                       const NoiseSchedule& sched, const EntropyReportOptions& opts,
                                       const fs::path& out_dir) {
    const std::vector<std::string>& prompts = prompts_in.empty() ? default_prompts() : prompts_in;
    const std::size_t n_layers = model.layer_count();
    const std::size_t d = model.config.channels;

    struct Acc {
        double entropy = 0, pct = 0, emap = 0, eout = 0, ev = 0, eav = 0, eiv = 0, euv = 0;
        std::size_t records = 0, units = 0, contained = 0;
        bool equal = true;
    };
    std::vector<Acc> acc(n_layers);
    std::ostringstream layer_csv;
    layer_csv << kLayerStatsCsvHeader << '\n';

    for (std::size_t p = 0; p < prompts.size(); ++p) {
        const ConditionPair conds{embed_prompt(prompts[p], d), Condition::null(d)};
        const Tensor x_T = initial_noise(model.config, opts.seed);
        std::vector<AttentionRecord> records;
        if (opts.policy == ProbePolicy::first_step) {
            Registry reg = opts.base ? *opts.base : model.make_registry();
            reg.record_all(true);
            ForwardHooks hooks;
            hooks.registry = &reg;
            hooks.capture_kv = true;
            records = predict_noise(model, VideoLatent{x_T, sched.steps.front()}, conds.cond, hooks).records;
        } else {
            SamplePlan plan;
            if (opts.base) plan.registry = *opts.base;
            plan.record = RecordPolicy::all_steps;
            plan.capture_kv = true;
            GuidanceSpec g;
            g.omega = opts.omega;
            for (auto& r : sample_from(model, x_T, conds, sched, g, plan).records)
                if (r.branch == "cA") records.push_back(std::move(r));
        }

        char id[16];
        std::snprintf(id, sizeof id, "p%02zu", p);
        std::vector<LayerStats> stats;
        for (const auto& rec : records) {
            const LayerStats s = layer_stats(rec);
            stats.push_back(s);
            Acc& a = acc[static_cast<std::size_t>(rec.layer_index)];
            a.entropy += s.entropy;
            a.pct += s.entropy_pct;
            a.emap += s.energy_map;
            a.eout += s.energy_out;
            ++a.records;

            // I V through the same kernel that mixes values in the forward pass.
            const TokenBlocks& tb = model.blocks_for(rec.mode);
            const std::size_t heads = rec.heads, n = rec.n_tokens, dh = d / heads;
            Tensor eye({rec.blocks * heads, n, n});
            for (std::size_t u = 0; u < rec.blocks * heads; ++u)
                for (std::size_t i = 0; i < n; ++i) eye[(u * n + i) * n + i] = 1.0f;
            Tensor iv(rec.values.dims());
            kernels::omp::block_apply_maps(eye.raw(), rec.values.raw(), d, heads, tb.layout(), iv.raw());
            for (std::size_t b = 0; b < tb.blocks; ++b) {
                for (std::size_t h = 0; h < heads; ++h) {
                    const std::size_t u = b * heads + h;
                    double e_iv = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        const std::size_t row = tb.index[b * n + i];
                        e_iv += energy(iv.data().subspan(row * d + h * dh, dh));
                    }
                    const double ev = rec.energy_v[u], eav = rec.energy_av[u], euv = rec.energy_uv[u];
                    a.ev += ev;
                    a.eav += eav;
                    a.eiv += e_iv;
                    a.euv += euv;
                    a.equal = a.equal && e_iv == ev;
                    a.contained += (euv <= eav && eav <= e_iv) ? 1 : 0;
                    ++a.units;
                }
            }
        }
        write_layer_stats_csv(layer_csv, id, stats, false);
    }

    std::vector<EntropyRow> rows;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Acc& a = acc[l];
        if (a.records == 0) continue;
        EntropyRow r;
        r.layer_index = static_cast<int>(l);
        r.mode = model.layers[l].mode;
        r.n_tokens = model.layers[l].n_tokens;
        const auto nr = static_cast<double>(a.records), nu = static_cast<double>(a.units);
        r.entropy = a.entropy / nr;
        r.entropy_pct = a.pct / nr;
        r.energy_map = a.emap / nr;
        r.energy_out = a.eout / nr;
        r.energy_v = a.ev / nu;
        r.energy_av = a.eav / nu;
        r.energy_iv = a.eiv / nu;
        r.energy_uv = a.euv / nu;
        r.eiv_equals_ev = a.equal;
        r.containment = static_cast<double>(a.contained) / nu;
        rows.push_back(r);
    }

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        {
            std::ofstream os(out_dir / "entropy_report.csv");
            if (!os) throw IoError("cannot write " + (out_dir / "entropy_report.csv").string());
            os << "layer_index,mode,n_tokens,entropy,entropy_pct,energy_map,energy_out,energy_v,energy_av,"
                  "energy_iv,energy_uv,eiv_equals_ev,containment_frac\n";
            for (const auto& r : rows) {
                os << r.layer_index << ',' << to_string(r.mode) << ',' << r.n_tokens << ',' << fmt(r.entropy) << ','
                   << fmt(r.entropy_pct) << ',' << fmt(r.energy_map) << ',' << fmt(r.energy_out) << ','
                   << fmt(r.energy_v) << ',' << fmt(r.energy_av) << ',' << fmt(r.energy_iv) << ',' << fmt(r.energy_uv) << ','
                   << (r.eiv_equals_ev ? "true" : "false") << ',' << fmt(r.containment) << '\n';
            }
        }
        {
            std::ofstream os(out_dir / "layer_stats.csv");
            os << layer_csv.str();
        }
        std::vector<std::string> groups;
        std::vector<std::vector<double>> pct, energies;
        for (const auto& r : rows) {
            groups.push_back("L" + std::to_string(r.layer_index));
            pct.push_back({r.entropy_pct});
            energies.push_back({r.energy_uv, r.energy_av, r.energy_iv});
        }
        std::ofstream(out_dir / "entropy_pct.svg") << svg_bar_chart("Attention entropy (% of max)", groups,
                                                                    {"entropy_pct"}, pct);
        std::ofstream(out_dir / "energy.svg") << svg_bar_chart("Mean output energy per token block", groups,
                                                               {"E(UV)", "E(AV)", "E(IV)"}, energies);
    }
    return rows;
}

}  // namespace ieadapt
