// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: generation, perturbation sweeps, entropy reports,
// guidance enhancement, editing, inversion and toy training.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ieadapt/adapt.hpp"
#include "ieadapt/errors.hpp"
#include "ieadapt/harness.hpp"
#include "ieadapt/iead.hpp"
#include "ieadapt/kernels.hpp"
#include "ieadapt/ops.hpp"
#include "ieadapt/trainer.hpp"

namespace fs = std::filesystem;
using namespace ieadapt;

namespace {

struct Common {
    std::uint64_t seed = 0;
    int steps = 25;
    std::size_t workers = 1;
    std::string weights;
    std::string out = "out";
    ModelConfig model;
    std::string topology = "factorized";
    bool trace = false;
    bool dump_attention = false;
};

std::string run_id(const std::string& descriptor) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(descriptor)));
    return buf;
}

ToyVDM load_or_init(const Common& c) {
    if (!c.weights.empty()) return load_model(c.weights);
    ModelConfig cfg = c.model;
    cfg.topology = parse_topology(c.topology);
    return init_model(cfg);
}

// Rec. 601 luma of each frame as binary PGM.
void write_frames(const fs::path& dir, const Tensor& video) {
    fs::create_directories(dir);
    const std::size_t f_n = video.dim(0), c_n = video.dim(1), h = video.dim(2), w = video.dim(3);
    for (std::size_t f = 0; f < f_n; ++f) {
        char name[32];
        std::snprintf(name, sizeof name, "frame%03zu.pgm", f);
        std::ofstream os(dir / name, std::ios::binary);
        if (!os) throw IoError("cannot write " + (dir / name).string());
        os << "P5\n" << w << ' ' << h << "\n255\n";
        for (std::size_t i = 0; i < h * w; ++i) {
            auto px = [&](std::size_t c) { return 0.5 * (static_cast<double>(video[(f * c_n + c) * h * w + i]) + 1.0); };
            const double y = c_n >= 3 ? 0.299 * px(0) + 0.587 * px(1) + 0.114 * px(2) : px(0);
            os.put(static_cast<char>(static_cast<unsigned char>(std::clamp(y, 0.0, 1.0) * 255.0 + 0.5)));
        }
    }
}

void dump_attention(const fs::path& run_dir, const std::vector<AttentionRecord>& records) {
    for (const auto& r : records) {
        if (r.branch != "cA") continue;
        iead::save(run_dir / ("t" + std::to_string(r.timestep)) /
                       ("layer" + std::to_string(r.layer_index) + "-" + std::string(to_string(r.mode)) + ".iead"),
                   r.maps);
    }
}

void save_video(const fs::path& dir, const std::string& stem, const ToyVDM& model, const Tensor& latent) {
    const Tensor video = decode(model, latent);
    iead::save(dir / (stem + "_latent.iead"), latent);
    iead::save(dir / (stem + "_video.iead"), video);
    write_frames(dir / (stem + "_frames"), video);
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        const auto dash = tok.find('-');
        try {
            if (dash != std::string::npos && dash > 0) {
                const auto a = std::stoull(tok.substr(0, dash)), b = std::stoull(tok.substr(dash + 1));
                if (b < a) throw ConfigError("bad seed range " + tok);
                for (auto v = a; v <= b; ++v) out.push_back(v);
            } else {
                out.push_back(std::stoull(tok));
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad seed list '" + s + "'");
        }
    }
    if (out.empty()) throw ConfigError("empty seed list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        try {
            out.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("bad number list '" + s + "'");
        }
    }
    return out;
}

Tensor load_real_latent(const ToyVDM& model, const std::string& path) {
    const Tensor t = iead::load(path);
    if (t.dims() == model.config.latent_dims()) return t;
    const Dims video{model.config.frames, 3, 4 * model.config.size, 4 * model.config.size};
    if (t.dims() == video) return encode_pseudo_inverse(model, t);
    throw ConfigError("video " + path + " matches neither the latent nor the decoded video shape");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Attention-entropy tools for a toy video diffusion model"};
    app.set_config("--config", "", "key=value configuration file; flags override it");
    app.require_subcommand(1);
    app.fallthrough();

    Common c;
    app.add_option("--seed", c.seed, "Sampling seed")->envname("IEADAPT_SEED");
    app.add_option("--steps", c.steps, "DDIM inference steps");
    app.add_option("--workers", c.workers, "Worker threads for sweeps");
    app.add_option("--weights", c.weights, "Model directory (manifest.txt + IEAD tensors)");
    app.add_option("--out", c.out, "Output directory");
    app.add_option("--frames", c.model.frames);
    app.add_option("--channels", c.model.channels);
    app.add_option("--size", c.model.size, "Latent height and width");
    app.add_option("--heads", c.model.heads);
    app.add_option("--encoder-blocks", c.model.encoder_blocks);
    app.add_option("--bottleneck-blocks", c.model.bottleneck_blocks);
    app.add_option("--decoder-blocks", c.model.decoder_blocks);
    app.add_option("--topology", c.topology, "factorized | full3d");
    app.add_option("--model-seed", c.model.seed, "Weight initialization seed");
    app.add_flag("--trace", c.trace, "Dump per-step latents and branch noise estimates");
    app.add_flag("--dump-attention", c.dump_attention, "Dump recorded attention maps");

    // generate
    auto* gen = app.add_subcommand("generate", "Sample one video");
    std::string prompt, neg_prompt;
    double omega = 9.0;
    bool all_steps = false;
    gen->add_option("--prompt", prompt)->required();
    gen->add_option("--negative-prompt", neg_prompt);
    gen->add_option("--omega", omega, "CFG weight");
    gen->add_flag("--all-steps", all_steps, "With --dump-attention, dump every step");

    // perturb
    auto* per = app.add_subcommand("perturb", "Attention perturbation sweep");
    std::string sweep = "single", matrix = "IU", alpha_list = "0,0.25,0.5,0.75,1", prompts_file, seeds = "0";
    std::string rho_list = "0.25,0.5,0.75,1";
    std::vector<std::string> layer_specs, strategy_specs;
    per->add_option("--sweep", sweep, "single | multi | blend | strategy | rho");
    per->add_option("--matrix", matrix, "I, U or IU");
    per->add_option("--alpha", alpha_list, "Blend weights, comma separated");
    per->add_option("--layers", layer_specs,
                    "Layer list (0,2,5) or preset: top50_entropy bottom50_entropy encoder_layers decoder_layers "
                    "spatial_only temporal_only");
    per->add_option("--strategies", strategy_specs, "strategy[:combo[:lambda]], e.g. eq5:AI:1 s3");
    per->add_option("--rho", rho_list, "Injection fractions for rho sweeps");
    per->add_option("--prompts", prompts_file, "Prompt file; default is the bundled set");
    per->add_option("--seeds", seeds, "Seed list: 0,1,2 or 0-9");
    per->add_option("--omega", omega, "CFG weight");

    // entropy-report
    auto* ent = app.add_subcommand("entropy-report", "Per-layer entropy and energy report");
    std::string policy = "first";
    ent->add_option("--prompts", prompts_file);
    ent->add_option("--policy", policy, "first | mean");
    ent->add_option("--omega", omega);

    // enhance
    auto* enh = app.add_subcommand("enhance", "Sample with entropy-guided attention guidance");
    std::string combo = "AI", strategy = "eq5";
    double lambda = 1.0;
    enh->add_option("--prompt", prompt)->required();
    enh->add_option("--combo", combo, "AI | UA | UI");
    enh->add_option("--strategy", strategy, "eq5 | s1 | s2 | s3 | s4");
    enh->add_option("--omega", omega);
    enh->add_option("--lambda", lambda);
    enh->add_option("--policy", policy, "Probe policy: first | mean");

    // edit
    auto* edt = app.add_subcommand("edit", "Edit by injecting low-entropy attention maps");
    std::string src_prompt, dst_prompt, real_path, layer_policy = "entropy", inject = "map", edit_layers;
    EditConfig ecfg;
    edt->add_option("--src-prompt", src_prompt)->required();
    edt->add_option("--dst-prompt", dst_prompt)->required();
    edt->add_option("--rho", ecfg.rho);
    edt->add_option("--omega", ecfg.omega);
    edt->add_option("--real", real_path, "Edit an existing video (IEAD latent or decoded video)");
    edt->add_option("--real-omega", ecfg.real_omega);
    edt->add_option("--policy", policy, "Probe policy: first | mean");
    edt->add_option("--layer-policy", layer_policy, "entropy | tokenflow | explicit");
    edt->add_option("--inject", inject, "map | kv | value");
    edt->add_option("--layers", edit_layers, "Layer list for --layer-policy explicit");

    // invert
    auto* inv = app.add_subcommand("invert", "DDIM inversion and reconstruction");
    std::string video_path;
    inv->add_option("--video", video_path)->required();
    inv->add_option("--prompt", prompt)->required();

    // train-toy
    auto* trn = app.add_subcommand("train-toy", "Train the toy denoiser on synthetic moving squares");
    TrainConfig tcfg;
    trn->add_option("--steps", tcfg.steps, "Optimizer steps");
    trn->add_option("--lr", tcfg.lr);
    trn->add_option("--batch", tcfg.batch);
    trn->add_option("--train-seed", tcfg.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c.steps < 1) throw ConfigError("--steps must be >= 1");
        kernels::set_threads(static_cast<int>(std::max<std::size_t>(1, c.workers)));
        const fs::path out = c.out;

        if (*trn) {
            ToyVDM model = load_or_init(c);
            std::ofstream log;
            fs::create_directories(out);
            log.open(out / "loss.csv");
            log << "step,loss\n";
            const TrainResult r = train(model, tcfg, [&](int step, double loss) {
                log << step << ',' << loss << '\n';
                if (step % 100 == 0) std::cerr << "step " << step << " loss " << loss << '\n';
            });
            save_model(model, out / "weights");
            std::cout << "eval_loss_initial=" << r.eval_loss_initial << "\neval_loss_final=" << r.eval_loss_final
                      << "\nweights=" << (out / "weights").string() << '\n';
            return 0;
        }

        const ToyVDM model = load_or_init(c);
        const NoiseSchedule sched = make_schedule(c.steps, model.config.train_steps);

        if (*gen) {
            GuidanceSpec g;
            g.omega = omega;
            std::ostringstream d;
            d << "generate|" << prompt << '|' << neg_prompt << '|' << c.seed << '|' << c.steps << '|' << omega;
            const fs::path run_dir = out / ("run-" + run_id(d.str()));
            SamplePlan plan;
            if (c.dump_attention) plan.record = all_steps ? RecordPolicy::all_steps : RecordPolicy::first_step;
            if (c.trace) plan.trace_dir = run_dir / "trace";
            const SampleResult r = sample(model, prompt, neg_prompt, c.seed, sched, g, plan);
            save_video(run_dir, "sample", model, r.x0);
            if (c.dump_attention) dump_attention(run_dir, r.records);
            std::cout << run_dir.string() << '\n';
            return 0;
        }

        if (*per) {
            SweepSpec spec;
            spec.kind = parse_sweep_kind(sweep);
            spec.matrices.clear();
            for (char m : matrix) spec.matrices.push_back(m);
            spec.alphas = parse_double_list(alpha_list);
            spec.rhos = parse_double_list(rho_list);
            spec.seeds = parse_seed_list(seeds);
            spec.omega = omega;
            spec.steps = c.steps;
            if (!prompts_file.empty()) spec.prompts = read_prompts(prompts_file);
            if (spec.kind == SweepKind::multi_layer) {
                spec.combos = layer_specs;
            } else if (!layer_specs.empty()) {
                for (const auto& s : layer_specs)
                    for (int l : resolve_layer_set(s, model, {})) spec.layers.push_back(l);
            }
            for (const auto& s : strategy_specs) {
                GuidanceSpec g;
                g.omega = omega;
                std::stringstream ss(s);
                std::string part;
                if (std::getline(ss, part, ':')) g.strategy = parse_strategy(part);
                if (std::getline(ss, part, ':')) g.combo = parse_combo(part);
                if (std::getline(ss, part, ':')) g.lambda = std::stod(part);
                spec.strategies.push_back(g);
            }
            SweepStats stats;
            const auto records = run_sweep(spec, model, sched, {out, c.workers}, &stats);
            emit_report(records, out);
            std::cout << "runs=" << records.size() << " executed=" << stats.executed << " resumed=" << stats.resumed
                      << " baselines=" << stats.baselines << '\n';
            return 0;
        }

        if (*ent) {
            EntropyReportOptions opts;
            opts.policy = parse_probe_policy(policy);
            opts.seed = c.seed;
            opts.omega = omega;
            const auto prompts = prompts_file.empty() ? default_prompts() : read_prompts(prompts_file);
            const auto rows = entropy_report(model, prompts, sched, opts, out);
            std::cout << "layers=" << rows.size() << " report=" << (out / "entropy_report.csv").string() << '\n';
            return 0;
        }

        if (*enh) {
            GuidanceSpec g;
            g.omega = omega;
            g.lambda = lambda;
            g.combo = parse_combo(combo);
            g.strategy = parse_strategy(strategy);
            const EnhanceResult r = enhance(model, prompt, c.seed, sched, g, parse_probe_policy(policy));
            std::ostringstream d;
            d << "enhance|" << prompt << '|' << c.seed << '|' << c.steps << '|' << omega << '|' << lambda << '|'
              << combo << '|' << strategy << '|' << policy;
            const fs::path run_dir = out / ("run-" + run_id(d.str()));
            save_video(run_dir, "enhanced", model, r.x0);
            std::ofstream(run_dir / "enhance.txt") << "layer=" << r.layer << "\nstrategy=" << strategy
                                                   << "\ncombo=" << combo << "\nomega=" << omega
                                                   << "\nlambda=" << lambda << "\nseed=" << c.seed << '\n';
            std::cout << run_dir.string() << '\n';
            return 0;
        }

        if (*edt) {
            ecfg.probe = parse_probe_policy(policy);
            ecfg.layer_policy = parse_layer_policy(layer_policy);
            ecfg.inject = parse_inject_kind(inject);
            if (ecfg.layer_policy == LayerPolicy::explicit_set) {
                if (edit_layers.empty()) throw ConfigError("--layer-policy explicit needs --layers");
                ecfg.layers = resolve_layer_set(edit_layers, model, {});
            }
            if (!(ecfg.rho > 0.0 && ecfg.rho <= 1.0)) throw ConfigError("--rho must be in (0, 1]");
            const bool real = !real_path.empty();
            const EditResult r = real ? edit_real(model, load_real_latent(model, real_path), src_prompt, dst_prompt,
                                                  sched, ecfg)
                                      : edit_generated(model, src_prompt, dst_prompt, c.seed, sched, ecfg);
            std::ostringstream d;
            d << "edit|" << src_prompt << '|' << dst_prompt << '|' << c.seed << '|' << c.steps << '|' << ecfg.rho
              << '|' << real_path << '|' << layer_policy << '|' << inject << '|' << policy;
            const fs::path run_dir = out / ("run-" + run_id(d.str()));
            save_video(run_dir, "source", model, r.src_latent);
            save_video(run_dir, "edited", model, r.dst_latent);
            write_edit_manifest(run_dir / "edit_manifest.txt", r, ecfg, src_prompt, dst_prompt, c.seed, sched,
                                real ? "real" : "generated");
            std::cout << run_dir.string() << '\n';
            return 0;
        }

        if (*inv) {
            const Tensor x0 = load_real_latent(model, video_path);
            const Condition cond = embed_prompt(prompt, model.config.channels);
            const auto traj = ddim_invert(model, x0, cond, sched);
            GuidanceSpec g;
            g.omega = 1.0;
            const Tensor recon =
                sample_from(model, traj.back(), {cond, Condition::null(model.config.channels)}, sched, g).x0;
            std::ostringstream d;
            d << "invert|" << video_path << '|' << prompt << '|' << c.steps;
            const fs::path run_dir = out / ("run-" + run_id(d.str()));
            iead::save(run_dir / "inverted_latent.iead", traj.back());
            save_video(run_dir, "reconstruction", model, recon);
            const double err = relative_l2(recon, x0);
            std::ofstream(run_dir / "invert.txt") << "steps=" << c.steps << "\nrelative_l2=" << err << '\n';
            std::cout << "relative_l2=" << err << '\n' << run_dir.string() << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const SpecError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
