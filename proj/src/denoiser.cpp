// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/denoiser.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ieadapt/errors.hpp"
#include "ieadapt/iead.hpp"
#include "ieadapt/infotheory.hpp"
#include "ieadapt/ops.hpp"
#include "ieadapt/rng.hpp"

namespace ieadapt {

std::string_view to_string(Topology t) { return t == Topology::factorized ? "factorized" : "full3d"; }

Topology parse_topology(std::string_view text) {
    if (text == "factorized") return Topology::factorized;
    if (text == "full3d") return Topology::full3d;
    throw ConfigError("unknown topology '" + std::string(text) + "'");
}

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::encoder: return "encoder";
        case Stage::bottleneck: return "bottleneck";
        case Stage::decoder: return "decoder";
    }
    return "?";
}

std::size_t ModelConfig::attention_layers() const {
    return (topology == Topology::factorized ? 2 : 1) * total_blocks();
}

void ModelConfig::validate() const {
    if (frames < 2 || size < 2) throw ConfigError("frames and size must be >= 2");
    if (channels == 0) throw ConfigError("channels must be positive");
    if (heads == 0 || channels % heads != 0) throw ConfigError("heads must divide channels");
    if (!(decoder_blocks == encoder_blocks || decoder_blocks + 1 == encoder_blocks)) {
        throw ConfigError("decoder block count must equal encoder count or encoder count - 1 (skip pairing)");
    }
    if (total_blocks() == 0) throw ConfigError("model needs at least one block");
    if (train_steps < 1) throw ConfigError("train_steps must be positive");
}

int ToyVDM::skip_source(std::size_t block) const {
    const auto& c = config;
    const std::size_t first_dec = c.encoder_blocks + c.bottleneck_blocks;
    if (block < first_dec) return -1;
    const std::size_t j = block - first_dec;
    return static_cast<int>(c.encoder_blocks) - 1 - static_cast<int>(j);
}

namespace {

constexpr float kLnEps = 1e-5f;

template <typename Model, typename T>
std::vector<std::pair<std::string, T*>> collect(Model& m) {
    std::vector<std::pair<std::string, T*>> out;
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        auto& bw = m.blocks[b];
        const std::string p = "blocks." + std::to_string(b) + ".";
        out.emplace_back(p + "ln1_g", &bw.ln1_g);
        out.emplace_back(p + "ln1_b", &bw.ln1_b);
        out.emplace_back(p + "attn_s.w_q", &bw.attn_s.w_q);
        out.emplace_back(p + "attn_s.w_k", &bw.attn_s.w_k);
        out.emplace_back(p + "attn_s.w_v", &bw.attn_s.w_v);
        out.emplace_back(p + "attn_s.w_out", &bw.attn_s.w_out);
        if (m.config.topology == Topology::factorized) {
            out.emplace_back(p + "ln2_g", &bw.ln2_g);
            out.emplace_back(p + "ln2_b", &bw.ln2_b);
            out.emplace_back(p + "attn_t.w_q", &bw.attn_t.w_q);
            out.emplace_back(p + "attn_t.w_k", &bw.attn_t.w_k);
            out.emplace_back(p + "attn_t.w_v", &bw.attn_t.w_v);
            out.emplace_back(p + "attn_t.w_out", &bw.attn_t.w_out);
        }
        out.emplace_back(p + "ln3_g", &bw.ln3_g);
        out.emplace_back(p + "ln3_b", &bw.ln3_b);
        out.emplace_back(p + "mlp_w1", &bw.mlp_w1);
        out.emplace_back(p + "mlp_b1", &bw.mlp_b1);
        out.emplace_back(p + "mlp_w2", &bw.mlp_w2);
        out.emplace_back(p + "mlp_b2", &bw.mlp_b2);
    }
    out.emplace_back("time_table", &m.time_table);
    out.emplace_back("w_cond", &m.w_cond);
    out.emplace_back("lnf_g", &m.lnf_g);
    out.emplace_back("lnf_b", &m.lnf_b);
    out.emplace_back("w_final", &m.w_final);
    out.emplace_back("b_final", &m.b_final);
    out.emplace_back("dec_w", &m.dec_w);
    out.emplace_back("dec_b", &m.dec_b);
    return out;
}

Tensor scaled_gaussian(const SeededRng& root, const std::string& name, Dims dims, double std) {
    SeededRng rng = root.derive(name);
    Tensor t = gaussian(rng, dims);
    for (auto& v : t.data()) v = static_cast<float>(v * std);
    return t;
}

Tensor affine_norm(const Tensor& h, const Tensor& g, const Tensor& b) {
    Tensor y = layer_norm(h, kLnEps);
    const std::size_t d = y.dim(1);
    for (std::size_t r = 0; r < y.dim(0); ++r) {
        float* row = y.raw() + r * d;
        for (std::size_t j = 0; j < d; ++j) row[j] = row[j] * g[j] + b[j];
    }
    return y;
}

void add_row_bias(Tensor& m, const Tensor& bias) {
    const std::size_t d = m.dim(1);
    for (std::size_t r = 0; r < m.dim(0); ++r) {
        float* row = m.raw() + r * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += bias[j];
    }
}

inline float silu(float x) { return x / (1.0f + std::exp(-x)); }

Tensor mlp(const Tensor& x, const BlockWeights& bw) {
    Tensor hidden = matmul(x, bw.mlp_w1);
    add_row_bias(hidden, bw.mlp_b1);
    for (auto& v : hidden.data()) v = silu(v);
    Tensor out = matmul(hidden, bw.mlp_w2);
    add_row_bias(out, bw.mlp_b2);
    return out;
}

void log_event(const ForwardHooks& hooks, int layer, HookAction a, int t) {
    if (hooks.log) hooks.log->events.push_back({layer, a, t, hooks.branch});
}

const AttentionRecord& require_source(const LayerHook& hook, const ForwardHooks& hooks, int layer, int t,
                                      const TokenBlocks& tb, std::size_t heads) {
    const AttentionRecord* src = hook.source->find(hooks.branch, t, layer);
    if (!src) {
        throw InjectionError("no recorded maps for branch " + hooks.branch + ", t=" + std::to_string(t) +
                             ", layer " + std::to_string(layer));
    }
    if (src->n_tokens != tb.n || src->blocks != tb.blocks || src->heads != heads) {
        throw InjectionError("recorded maps for layer " + std::to_string(layer) + " have N=" +
                             std::to_string(src->n_tokens) + " but the layer has N=" + std::to_string(tb.n));
    }
    return *src;
}

// Energies of V, AV and UV per (block, head).
void unit_energies(const BlockedAttention& att, const TokenBlocks& tb, std::size_t heads, AttentionRecord& rec) {
    const std::size_t d = att.v.dim(1), dh = d / heads;
    const std::size_t units = tb.blocks * heads;
    rec.energy_v.assign(units, 0.0);
    rec.energy_av.assign(units, 0.0);
    rec.energy_uv.assign(units, 0.0);
    std::vector<double> mean(dh);
    for (std::size_t b = 0; b < tb.blocks; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t u = b * heads + h;
            std::fill(mean.begin(), mean.end(), 0.0);
            for (std::size_t i = 0; i < tb.n; ++i) {
                const std::size_t row = tb.index[b * tb.n + i];
                const auto v = att.v.data().subspan(row * d + h * dh, dh);
                const auto av = att.mixed.data().subspan(row * d + h * dh, dh);
                rec.energy_v[u] += energy(v);
                rec.energy_av[u] += energy(av);
                for (std::size_t c = 0; c < dh; ++c) mean[c] += v[c];
            }
            double e = 0.0;
            for (std::size_t c = 0; c < dh; ++c) {
                const double m = mean[c] / static_cast<double>(tb.n);
                e += m * m;
            }
            rec.energy_uv[u] = static_cast<double>(tb.n) * e;
        }
    }
}

Tensor attention_layer(const ToyVDM& model, const LayerInfo& info, const AttentionWeights& w, const Tensor& xn,
                       int t, const ForwardHooks& hooks, std::vector<AttentionRecord>& records) {
    const TokenBlocks& tb = model.blocks_for(info.mode);
    const std::size_t heads = w.heads;
    BlockedAttention att;
    att.project(xn, w);

    const LayerHook* hook = hooks.registry ? &hooks.registry->at(info.index) : nullptr;
    const HookAction action = hook ? hook->action : HookAction::none;
    if (action == HookAction::inject_kv || action == HookAction::inject_v) {
        const AttentionRecord& src = require_source(*hook, hooks, info.index, t, tb, heads);
        if (src.values.empty() || (action == HookAction::inject_kv && src.keys.empty())) {
            throw InjectionError("source record for layer " + std::to_string(info.index) +
                                 " did not capture keys/values");
        }
        if (action == HookAction::inject_kv) att.k = src.keys;
        att.v = src.values;
    }
    att.compute_maps(tb, heads);
    if (action == HookAction::replace) {
        att.overwrite_maps(materialize(hook->matrix, tb.n));
    } else if (action == HookAction::inject) {
        att.maps = require_source(*hook, hooks, info.index, t, tb, heads).maps;
    }
    if (action != HookAction::none) log_event(hooks, info.index, action, t);
    att.mix(tb, heads);
    att.project_out(w);

    if (hooks.registry && hooks.registry->records(info.index)) {
        AttentionRecord rec;
        rec.layer_index = info.index;
        rec.mode = info.mode;
        rec.timestep = t;
        rec.branch = hooks.branch;
        rec.blocks = tb.blocks;
        rec.heads = heads;
        rec.n_tokens = tb.n;
        unit_energies(att, tb, heads, rec);
        rec.maps = std::move(att.maps);
        if (hooks.capture_kv) {
            rec.keys = att.k;
            rec.values = att.v;
        }
        if (hooks.capture_outputs) rec.output = att.out;
        records.push_back(std::move(rec));
    }
    return std::move(att.out);
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> named_tensors(ToyVDM& model) {
    return collect<ToyVDM, Tensor>(model);
}

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const ToyVDM& model) {
    return collect<const ToyVDM, const Tensor>(model);
}

bool is_trainable(std::string_view name) {
    return name != "time_table" && name != "dec_w" && name != "dec_b";
}

void finalize_structure(ToyVDM& model) {
    const auto& c = model.config;
    const std::size_t pixels = c.size * c.size;
    model.token_blocks.clear();
    for (auto m : {AttentionMode::spatial, AttentionMode::temporal, AttentionMode::full3d})
        model.token_blocks.push_back(make_token_blocks(m, c.frames, pixels));
    model.layers.clear();
    int index = 0;
    for (std::size_t b = 0; b < c.total_blocks(); ++b) {
        const Stage stage = b < c.encoder_blocks                          ? Stage::encoder
                            : b < c.encoder_blocks + c.bottleneck_blocks ? Stage::bottleneck
                                                                          : Stage::decoder;
        if (c.topology == Topology::factorized) {
            model.layers.push_back({index++, b, stage, AttentionMode::spatial, pixels});
            model.layers.push_back({index++, b, stage, AttentionMode::temporal, c.frames});
        } else {
            model.layers.push_back({index++, b, stage, AttentionMode::full3d, pixels * c.frames});
        }
    }
}

ToyVDM init_model(const ModelConfig& cfg) {
    cfg.validate();
    ToyVDM m;
    m.config = cfg;
    const std::size_t d = cfg.channels;
    const double sd = 1.0 / std::sqrt(static_cast<double>(d));
    const double sd4 = 1.0 / std::sqrt(static_cast<double>(4 * d));
    const SeededRng root(cfg.seed);

    auto attn = [&](const std::string& p) {
        AttentionWeights w;
        w.heads = cfg.heads;
        w.w_q = scaled_gaussian(root, p + ".w_q", {d, d}, sd);
        w.w_k = scaled_gaussian(root, p + ".w_k", {d, d}, sd);
        w.w_v = scaled_gaussian(root, p + ".w_v", {d, d}, sd);
        w.w_out = scaled_gaussian(root, p + ".w_out", {d, d}, sd);
        return w;
    };
    for (std::size_t b = 0; b < cfg.total_blocks(); ++b) {
        const std::string p = "blocks." + std::to_string(b) + ".";
        BlockWeights bw;
        bw.ln1_g = Tensor({d}, 1.0f);
        bw.ln1_b = Tensor({d});
        bw.ln3_g = Tensor({d}, 1.0f);
        bw.ln3_b = Tensor({d});
        bw.attn_s = attn(p + "attn_s");
        if (cfg.topology == Topology::factorized) {
            bw.ln2_g = Tensor({d}, 1.0f);
            bw.ln2_b = Tensor({d});
            bw.attn_t = attn(p + "attn_t");
        }
        bw.mlp_w1 = scaled_gaussian(root, p + "mlp_w1", {d, 4 * d}, sd);
        bw.mlp_b1 = Tensor({4 * d});
        bw.mlp_w2 = scaled_gaussian(root, p + "mlp_w2", {4 * d, d}, sd4);
        bw.mlp_b2 = Tensor({d});
        m.blocks.push_back(std::move(bw));
    }

    const auto rows = static_cast<std::size_t>(cfg.train_steps) + 1;
    m.time_table = Tensor({rows, d});
    for (std::size_t t = 0; t < rows; ++t) {
        for (std::size_t i = 0; i < d; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(i / 2 * 2) / static_cast<double>(d));
            const double arg = static_cast<double>(t) * freq;
            m.time_table.at(t, i) = static_cast<float>(i % 2 == 0 ? std::sin(arg) : std::cos(arg));
        }
    }
    m.w_cond = scaled_gaussian(root, "w_cond", {d, d}, 1.0);
    m.lnf_g = Tensor({d}, 1.0f);
    m.lnf_b = Tensor({d});
    m.w_final = scaled_gaussian(root, "w_final", {d, d}, sd);
    m.b_final = Tensor({d});
    m.dec_w = scaled_gaussian(root, "dec_w", {d, 3}, sd);
    m.dec_b = Tensor({3});
    finalize_structure(m);
    return m;
}

Condition embed_prompt(std::string_view text, std::size_t dim) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        if (j > i) words.push_back(text.substr(i, j - i));
        i = j;
    }
    if (words.empty()) return Condition::null(dim);
    std::vector<double> acc(dim, 0.0);
    for (auto w : words) {
        SeededRng rng(fnv1a64(w));
        for (std::size_t k = 0; k < dim; ++k) acc[k] += rng.normal();
    }
    double norm = 0.0;
    for (auto& v : acc) {
        v /= static_cast<double>(words.size());
        norm += v * v;
    }
    norm = std::sqrt(norm);
    Tensor e({dim});
    for (std::size_t k = 0; k < dim; ++k) e[k] = static_cast<float>(norm > 0.0 ? acc[k] / norm : 0.0);
    return {std::move(e), false};
}

NoiseEstimate predict_noise(const ToyVDM& model, const VideoLatent& latent, const Condition& cond,
                            const ForwardHooks& hooks) {
    const auto& cfg = model.config;
    if (latent.x.dims() != cfg.latent_dims()) {
        throw ShapeError("latent " + dims_to_string(latent.x.dims()) + " does not match model " +
                         dims_to_string(cfg.latent_dims()));
    }
    if (latent.t < 0 || latent.t > cfg.train_steps) {
        throw DomainError("timestep " + std::to_string(latent.t) + " outside [0, " +
                          std::to_string(cfg.train_steps) + "]");
    }
    if (cond.embedding.dims() != Dims{cfg.channels}) throw ShapeError("condition embedding has wrong width");
    if (hooks.registry && hooks.registry->layer_count() != model.layer_count()) {
        throw RegistryError("registry was built for a different layer count");
    }

    const std::size_t d = cfg.channels;
    NoiseEstimate result;
    Tensor h = latent_to_tokens(latent.x);

    // Per-token conditioning vector: time embedding plus projected prompt.
    Tensor bias({d});
    {
        const Tensor cproj = matmul(cond.embedding.reshaped({1, d}), model.w_cond);
        const auto trow = model.time_table.row(static_cast<std::size_t>(latent.t));
        for (std::size_t j = 0; j < d; ++j) bias[j] = trow[j] + cproj[j];
    }

    std::vector<Tensor> skips;
    std::size_t layer = 0;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const BlockWeights& bw = model.blocks[b];
        const int src = model.skip_source(b);
        if (src >= 0) add_inplace(h, skips[static_cast<std::size_t>(src)]);
        add_row_bias(h, bias);

        add_inplace(h, attention_layer(model, model.layers[layer], bw.attn_s, affine_norm(h, bw.ln1_g, bw.ln1_b),
                                       latent.t, hooks, result.records));
        ++layer;
        if (cfg.topology == Topology::factorized) {
            add_inplace(h, attention_layer(model, model.layers[layer], bw.attn_t,
                                           affine_norm(h, bw.ln2_g, bw.ln2_b), latent.t, hooks, result.records));
            ++layer;
        }
        add_inplace(h, mlp(affine_norm(h, bw.ln3_g, bw.ln3_b), bw));
        if (b < cfg.encoder_blocks) skips.push_back(h);
    }

    Tensor out = matmul(affine_norm(h, model.lnf_g, model.lnf_b), model.w_final);
    add_row_bias(out, model.b_final);
    result.eps = tokens_to_latent(out, cfg.latent_dims());
    return result;
}

Tensor decode(const ToyVDM& model, const Tensor& latent) {
    require_rank(latent, 4, "decode");
    const std::size_t f_n = latent.dim(0), c_n = latent.dim(1), hh = latent.dim(2), ww = latent.dim(3);
    if (c_n != model.dec_w.dim(0)) throw ShapeError("decode: channel count differs from projection");
    const std::size_t oh = 4 * hh, ow = 4 * ww;
    Tensor video({f_n, 3, oh, ow});
    for (std::size_t f = 0; f < f_n; ++f) {
        for (std::size_t y = 0; y < hh; ++y) {
            for (std::size_t x = 0; x < ww; ++x) {
                for (std::size_t o = 0; o < 3; ++o) {
                    float acc = model.dec_b[o];
                    for (std::size_t c = 0; c < c_n; ++c)
                        acc += latent[((f * c_n + c) * hh + y) * ww + x] * model.dec_w.at(c, o);
                    const float px = std::tanh(acc);
                    for (std::size_t dy = 0; dy < 4; ++dy)
                        for (std::size_t dx = 0; dx < 4; ++dx)
                            video[((f * 3 + o) * oh + 4 * y + dy) * ow + 4 * x + dx] = px;
                }
            }
        }
    }
    return video;
}

double decode_lipschitz(const ToyVDM& model) {
    double best = 0.0;
    for (std::size_t o = 0; o < 3; ++o) {
        double s = 0.0;
        for (std::size_t c = 0; c < model.dec_w.dim(0); ++c) s += std::abs(static_cast<double>(model.dec_w.at(c, o)));
        best = std::max(best, s);
    }
    return best;
}

Tensor encode_pseudo_inverse(const ToyVDM& model, const Tensor& video) {
    require_rank(video, 4, "encode_pseudo_inverse");
    const std::size_t f_n = video.dim(0), oh = video.dim(2), ow = video.dim(3);
    if (video.dim(1) != 3 || oh % 4 != 0 || ow % 4 != 0) throw ShapeError("video must be [F x 3 x 4H x 4W]");
    const std::size_t hh = oh / 4, ww = ow / 4, c_n = model.dec_w.dim(0);

    // Minimum-norm solution of W^T c = y: c = W (W^T W)^-1 y.
    double g[3][3] = {};
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = 0; b < 3; ++b)
            for (std::size_t c = 0; c < c_n; ++c)
                g[a][b] += static_cast<double>(model.dec_w.at(c, a)) * model.dec_w.at(c, b);
    const double det = g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1]) -
                       g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0]) +
                       g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0]);
    if (std::abs(det) < 1e-12) throw DomainError("decoder projection is rank deficient");
    double inv[3][3];
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            const int r1 = (c + 1) % 3, r2 = (c + 2) % 3, c1 = (r + 1) % 3, c2 = (r + 2) % 3;
            inv[r][c] = (g[r1][c1] * g[r2][c2] - g[r1][c2] * g[r2][c1]) / det;
        }
    }

    Tensor latent({f_n, c_n, hh, ww});
    for (std::size_t f = 0; f < f_n; ++f) {
        for (std::size_t y = 0; y < hh; ++y) {
            for (std::size_t x = 0; x < ww; ++x) {
                double target[3];
                for (std::size_t o = 0; o < 3; ++o) {
                    double mean = 0.0;
                    for (std::size_t dy = 0; dy < 4; ++dy)
                        for (std::size_t dx = 0; dx < 4; ++dx)
                            mean += video[((f * 3 + o) * oh + 4 * y + dy) * ow + 4 * x + dx];
                    mean = std::clamp(mean / 16.0, -0.999, 0.999);
                    target[o] = std::atanh(mean) - model.dec_b[o];
                }
                double z[3];
                for (int r = 0; r < 3; ++r) z[r] = inv[r][0] * target[0] + inv[r][1] * target[1] + inv[r][2] * target[2];
                for (std::size_t c = 0; c < c_n; ++c) {
                    double v = 0.0;
                    for (std::size_t o = 0; o < 3; ++o) v += model.dec_w.at(c, o) * z[o];
                    latent[((f * c_n + c) * hh + y) * ww + x] = static_cast<float>(v);
                }
            }
        }
    }
    return latent;
}

void save_model(const ToyVDM& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw IoError("cannot write " + (dir / "manifest.txt").string());
    const auto& c = model.config;
    manifest << "config.frames=" << c.frames << '\n'
             << "config.channels=" << c.channels << '\n'
             << "config.size=" << c.size << '\n'
             << "config.encoder_blocks=" << c.encoder_blocks << '\n'
             << "config.bottleneck_blocks=" << c.bottleneck_blocks << '\n'
             << "config.decoder_blocks=" << c.decoder_blocks << '\n'
             << "config.heads=" << c.heads << '\n'
             << "config.topology=" << to_string(c.topology) << '\n'
             << "config.seed=" << c.seed << '\n'
             << "config.train_steps=" << c.train_steps << '\n';
    for (const auto& [name, t] : named_tensors(model)) {
        const std::string file = name + ".iead";
        iead::save(dir / file, *t);
        manifest << name << '=' << file << '\n';
    }
}

ToyVDM load_model(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.txt");
    if (!is) throw IoError("missing " + (dir / "manifest.txt").string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    auto get = [&](const std::string& k) {
        auto it = kv.find(k);
        if (it == kv.end()) throw IoError("manifest lacks " + k);
        return it->second;
    };
    ModelConfig c;
    c.frames = std::stoul(get("config.frames"));
    c.channels = std::stoul(get("config.channels"));
    c.size = std::stoul(get("config.size"));
    c.encoder_blocks = std::stoul(get("config.encoder_blocks"));
    c.bottleneck_blocks = std::stoul(get("config.bottleneck_blocks"));
    c.decoder_blocks = std::stoul(get("config.decoder_blocks"));
    c.heads = std::stoul(get("config.heads"));
    c.topology = parse_topology(get("config.topology"));
    c.seed = std::stoull(get("config.seed"));
    c.train_steps = std::stoi(get("config.train_steps"));
    ToyVDM m = init_model(c);
    for (auto& [name, t] : named_tensors(m)) {
        Tensor loaded = iead::load(dir / get(name));
        if (loaded.dims() != t->dims()) throw IoError("tensor " + name + " has unexpected dims");
        *t = std::move(loaded);
    }
    return m;
}

}  // namespace ieadapt
