// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "ieadapt/errors.hpp"
#include "ieadapt/ops.hpp"
#include "ieadapt/sampler.hpp"

namespace ieadapt {
namespace {

// Row-major double matrix.
struct Mat {
    std::size_t r = 0, c = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(std::size_t rows, std::size_t cols) : r(rows), c(cols), v(rows * cols, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return v[i * c + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * c + j]; }
};

// A [r x k] times W [k x c], W read from a flat parameter vector.
Mat mm(const Mat& a, const std::vector<double>& w, std::size_t cols) {
    Mat out(a.r, cols);
    for (std::size_t i = 0; i < a.r; ++i) {
        for (std::size_t k = 0; k < a.c; ++k) {
            const double x = a(i, k);
            const double* wr = w.data() + k * cols;
            double* o = out.v.data() + i * cols;
            for (std::size_t j = 0; j < cols; ++j) o[j] += x * wr[j];
        }
    }
    return out;
}

// grad_w += a^T g
void mm_tn_acc(const Mat& a, const Mat& g, std::vector<double>& grad_w) {
    for (std::size_t i = 0; i < a.r; ++i) {
        for (std::size_t k = 0; k < a.c; ++k) {
            const double x = a(i, k);
            double* gw = grad_w.data() + k * g.c;
            const double* gr = g.v.data() + i * g.c;
            for (std::size_t j = 0; j < g.c; ++j) gw[j] += x * gr[j];
        }
    }
}

// g W^T, W [k x c] with g [r x c]; result [r x k]
Mat mm_nt(const Mat& g, const std::vector<double>& w, std::size_t k) {
    Mat out(g.r, k);
    for (std::size_t i = 0; i < g.r; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double* wr = w.data() + kk * g.c;
            const double* gr = g.v.data() + i * g.c;
            double acc = 0.0;
            for (std::size_t j = 0; j < g.c; ++j) acc += gr[j] * wr[j];
            out(i, kk) = acc;
        }
    }
    return out;
}

void add_to(Mat& a, const Mat& b) {
    for (std::size_t i = 0; i < a.v.size(); ++i) a.v[i] += b.v[i];
}

const double kLnEps = static_cast<double>(1e-5f);

struct LnCache {
    Mat xhat;
    std::vector<double> inv;
};

Mat ln_forward(const Mat& x, const std::vector<double>& g, const std::vector<double>& b, LnCache& cache) {
    const std::size_t d = x.c;
    cache.xhat = Mat(x.r, d);
    cache.inv.assign(x.r, 0.0);
    Mat y(x.r, d);
    for (std::size_t i = 0; i < x.r; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += x(i, j);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (x(i, j) - mean) * (x(i, j) - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        cache.inv[i] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            cache.xhat(i, j) = (x(i, j) - mean) * inv;
            y(i, j) = cache.xhat(i, j) * g[j] + b[j];
        }
    }
    return y;
}

Mat ln_backward(const Mat& dy, const LnCache& cache, const std::vector<double>& g, std::vector<double>& dg,
                std::vector<double>& db) {
    const std::size_t d = dy.c;
    Mat dx(dy.r, d);
    std::vector<double> dxhat(d);
    for (std::size_t i = 0; i < dy.r; ++i) {
        double m1 = 0.0, m2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            dg[j] += dy(i, j) * cache.xhat(i, j);
            db[j] += dy(i, j);
            dxhat[j] = dy(i, j) * g[j];
            m1 += dxhat[j];
            m2 += dxhat[j] * cache.xhat(i, j);
        }
        m1 /= static_cast<double>(d);
        m2 /= static_cast<double>(d);
        for (std::size_t j = 0; j < d; ++j) dx(i, j) = cache.inv[i] * (dxhat[j] - m1 - cache.xhat(i, j) * m2);
    }
    return dx;
}

// Parameter slots of one attention layer / block, resolved by name.
struct AttnIdx {
    std::size_t g, b, q, k, v, out;
};
struct BlockIdx {
    AttnIdx s, t;
    bool has_t = false;
    std::size_t ln3_g, ln3_b, w1, b1, w2, b2;
};
struct Index {
    std::vector<BlockIdx> blocks;
    std::size_t time_table, w_cond, lnf_g, lnf_b, w_final, b_final;
};

Index resolve(const ParamSet& p, const ToyVDM& model) {
    Index ix;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const std::string pre = "blocks." + std::to_string(b) + ".";
        BlockIdx bi;
        bi.s = {p.find(pre + "ln1_g"), p.find(pre + "ln1_b"), p.find(pre + "attn_s.w_q"),
                p.find(pre + "attn_s.w_k"), p.find(pre + "attn_s.w_v"), p.find(pre + "attn_s.w_out")};
        bi.has_t = model.config.topology == Topology::factorized;
        if (bi.has_t) {
            bi.t = {p.find(pre + "ln2_g"), p.find(pre + "ln2_b"), p.find(pre + "attn_t.w_q"),
                    p.find(pre + "attn_t.w_k"), p.find(pre + "attn_t.w_v"), p.find(pre + "attn_t.w_out")};
        }
        bi.ln3_g = p.find(pre + "ln3_g");
        bi.ln3_b = p.find(pre + "ln3_b");
        bi.w1 = p.find(pre + "mlp_w1");
        bi.b1 = p.find(pre + "mlp_b1");
        bi.w2 = p.find(pre + "mlp_w2");
        bi.b2 = p.find(pre + "mlp_b2");
        ix.blocks.push_back(bi);
    }
    ix.time_table = p.find("time_table");
    ix.w_cond = p.find("w_cond");
    ix.lnf_g = p.find("lnf_g");
    ix.lnf_b = p.find("lnf_b");
    ix.w_final = p.find("w_final");
    ix.b_final = p.find("b_final");
    return ix;
}

struct AttnCache {
    LnCache ln;
    Mat xn, q, k, v, mixed;
    std::vector<double> maps;  // [blocks x heads x n x n]
};

struct MlpCache {
    LnCache ln;
    Mat xn, pre, act;
};

struct BlockCache {
    AttnCache s, t;
    MlpCache mlp;
};

struct Cache {
    std::vector<BlockCache> blocks;
    LnCache lnf;
    Mat xnf;
};

Mat attn_forward(const Mat& h, const ParamSet& p, const AttnIdx& ix, const TokenBlocks& tb, std::size_t heads,
                 AttnCache& c) {
    const std::size_t d = h.c, dh = d / heads, n = tb.n;
    c.xn = ln_forward(h, p.values[ix.g], p.values[ix.b], c.ln);
    c.q = mm(c.xn, p.values[ix.q], d);
    c.k = mm(c.xn, p.values[ix.k], d);
    c.v = mm(c.xn, p.values[ix.v], d);
    c.mixed = Mat(h.r, d);
    c.maps.assign(tb.blocks * heads * n * n, 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t b = 0; b < tb.blocks; ++b) {
        const std::uint32_t* idx = tb.index.data() + b * n;
        for (std::size_t hd = 0; hd < heads; ++hd) {
            double* a = c.maps.data() + (b * heads + hd) * n * n;
            for (std::size_t i = 0; i < n; ++i) {
                double mx = -INFINITY;
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t e = 0; e < dh; ++e) s += c.q(idx[i], hd * dh + e) * c.k(idx[j], hd * dh + e);
                    a[i * n + j] = s * scale;
                    mx = std::max(mx, a[i * n + j]);
                }
                double sum = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    a[i * n + j] = std::exp(a[i * n + j] - mx);
                    sum += a[i * n + j];
                }
                for (std::size_t j = 0; j < n; ++j) a[i * n + j] /= sum;
                for (std::size_t j = 0; j < n; ++j)
                    for (std::size_t e = 0; e < dh; ++e)
                        c.mixed(idx[i], hd * dh + e) += a[i * n + j] * c.v(idx[j], hd * dh + e);
            }
        }
    }
    return mm(c.mixed, p.values[ix.out], d);
}

// Returns d loss / d h (the layer input) contributed through the attention branch.
Mat attn_backward(const Mat& dout, const ParamSet& p, ParamSet& g, const AttnIdx& ix, const TokenBlocks& tb,
                  std::size_t heads, const AttnCache& c) {
    const std::size_t d = dout.c, dh = d / heads, n = tb.n;
    mm_tn_acc(c.mixed, dout, g.values[ix.out]);
    const Mat dmixed = mm_nt(dout, p.values[ix.out], d);
    Mat dq(dout.r, d), dk(dout.r, d), dv(dout.r, d);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<double> da(n);
    for (std::size_t b = 0; b < tb.blocks; ++b) {
        const std::uint32_t* idx = tb.index.data() + b * n;
        for (std::size_t hd = 0; hd < heads; ++hd) {
            const double* a = c.maps.data() + (b * heads + hd) * n * n;
            for (std::size_t i = 0; i < n; ++i) {
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t e = 0; e < dh; ++e) {
                        s += dmixed(idx[i], hd * dh + e) * c.v(idx[j], hd * dh + e);
                        dv(idx[j], hd * dh + e) += a[i * n + j] * dmixed(idx[i], hd * dh + e);
                    }
                    da[j] = s;
                    dot += s * a[i * n + j];
                }
                for (std::size_t j = 0; j < n; ++j) {
                    const double ds = a[i * n + j] * (da[j] - dot) * scale;
                    for (std::size_t e = 0; e < dh; ++e) {
                        dq(idx[i], hd * dh + e) += ds * c.k(idx[j], hd * dh + e);
                        dk(idx[j], hd * dh + e) += ds * c.q(idx[i], hd * dh + e);
                    }
                }
            }
        }
    }
    mm_tn_acc(c.xn, dq, g.values[ix.q]);
    mm_tn_acc(c.xn, dk, g.values[ix.k]);
    mm_tn_acc(c.xn, dv, g.values[ix.v]);
    Mat dxn = mm_nt(dq, p.values[ix.q], d);
    add_to(dxn, mm_nt(dk, p.values[ix.k], d));
    add_to(dxn, mm_nt(dv, p.values[ix.v], d));
    return ln_backward(dxn, c.ln, p.values[ix.g], g.values[ix.g], g.values[ix.b]);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Mat mlp_forward(const Mat& h, const ParamSet& p, const BlockIdx& ix, MlpCache& c) {
    const std::size_t d = h.c;
    c.xn = ln_forward(h, p.values[ix.ln3_g], p.values[ix.ln3_b], c.ln);
    c.pre = mm(c.xn, p.values[ix.w1], 4 * d);
    c.act = Mat(c.pre.r, c.pre.c);
    for (std::size_t i = 0; i < c.pre.r; ++i)
        for (std::size_t j = 0; j < c.pre.c; ++j) c.pre(i, j) += p.values[ix.b1][j];
    for (std::size_t e = 0; e < c.pre.v.size(); ++e) c.act.v[e] = c.pre.v[e] * sigmoid(c.pre.v[e]);
    Mat out = mm(c.act, p.values[ix.w2], d);
    for (std::size_t i = 0; i < out.r; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) += p.values[ix.b2][j];
    return out;
}

Mat mlp_backward(const Mat& dout, const ParamSet& p, ParamSet& g, const BlockIdx& ix, const MlpCache& c) {
    const std::size_t d = dout.c;
    mm_tn_acc(c.act, dout, g.values[ix.w2]);
    for (std::size_t i = 0; i < dout.r; ++i)
        for (std::size_t j = 0; j < d; ++j) g.values[ix.b2][j] += dout(i, j);
    Mat dpre = mm_nt(dout, p.values[ix.w2], 4 * d);
    for (std::size_t e = 0; e < dpre.v.size(); ++e) {
        const double z = c.pre.v[e], s = sigmoid(z);
        dpre.v[e] *= s * (1.0 + z * (1.0 - s));
    }
    mm_tn_acc(c.xn, dpre, g.values[ix.w1]);
    for (std::size_t i = 0; i < dpre.r; ++i)
        for (std::size_t j = 0; j < dpre.c; ++j) g.values[ix.b1][j] += dpre(i, j);
    const Mat dxn = mm_nt(dpre, p.values[ix.w1], d);
    return ln_backward(dxn, c.ln, p.values[ix.ln3_g], g.values[ix.ln3_g], g.values[ix.ln3_b]);
}

Mat to_tokens(const Tensor& x, const ModelConfig& cfg) {
    const std::size_t f_n = cfg.frames, d = cfg.channels, hw = cfg.size * cfg.size;
    Mat m(f_n * hw, d);
    for (std::size_t f = 0; f < f_n; ++f)
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t q = 0; q < hw; ++q) m(f * hw + q, c) = x[(f * d + c) * hw + q];
    return m;
}

std::vector<double> from_tokens(const Mat& m, const ModelConfig& cfg) {
    const std::size_t f_n = cfg.frames, d = cfg.channels, hw = cfg.size * cfg.size;
    std::vector<double> out(f_n * d * hw);
    for (std::size_t f = 0; f < f_n; ++f)
        for (std::size_t c = 0; c < d; ++c)
            for (std::size_t q = 0; q < hw; ++q) out[(f * d + c) * hw + q] = m(f * hw + q, c);
    return out;
}

std::vector<double> cond_bias(const ParamSet& p, const Index& ix, const TrainSample& s, std::size_t d) {
    std::vector<double> bias(d);
    const auto& tt = p.values[ix.time_table];
    const auto& wc = p.values[ix.w_cond];
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += static_cast<double>(s.cond.embedding[i]) * wc[i * d + j];
        bias[j] = tt[static_cast<std::size_t>(s.t) * d + j] + acc;
    }
    return bias;
}

Mat forward(const ToyVDM& model, const ParamSet& p, const Index& ix, const TrainSample& s, Cache& cache) {
    const auto& cfg = model.config;
    const std::size_t d = cfg.channels;
    Mat h = to_tokens(s.x_t, cfg);
    const std::vector<double> bias = cond_bias(p, ix, s, d);
    cache.blocks.assign(model.blocks.size(), {});
    std::vector<Mat> skips;
    std::size_t layer = 0;
    for (std::size_t b = 0; b < model.blocks.size(); ++b) {
        const BlockIdx& bi = ix.blocks[b];
        BlockCache& bc = cache.blocks[b];
        const int src = model.skip_source(b);
        if (src >= 0) add_to(h, skips[static_cast<std::size_t>(src)]);
        for (std::size_t i = 0; i < h.r; ++i)
            for (std::size_t j = 0; j < d; ++j) h(i, j) += bias[j];
        const std::size_t heads = model.blocks[b].attn_s.heads;
        add_to(h, attn_forward(h, p, bi.s, model.blocks_for(model.layers[layer].mode), heads, bc.s));
        ++layer;
        if (bi.has_t) {
            add_to(h, attn_forward(h, p, bi.t, model.blocks_for(model.layers[layer].mode), heads, bc.t));
            ++layer;
        }
        add_to(h, mlp_forward(h, p, bi, bc.mlp));
        if (b < cfg.encoder_blocks) skips.push_back(h);
    }
    cache.xnf = ln_forward(h, p.values[ix.lnf_g], p.values[ix.lnf_b], cache.lnf);
    Mat out = mm(cache.xnf, p.values[ix.w_final], d);
    for (std::size_t i = 0; i < out.r; ++i)
        for (std::size_t j = 0; j < d; ++j) out(i, j) += p.values[ix.b_final][j];
    return out;
}

void backward(const ToyVDM& model, const ParamSet& p, const Index& ix, const TrainSample& s, const Cache& cache,
              const Mat& dout, ParamSet& g) {
    const auto& cfg = model.config;
    const std::size_t d = cfg.channels;
    mm_tn_acc(cache.xnf, dout, g.values[ix.w_final]);
    for (std::size_t i = 0; i < dout.r; ++i)
        for (std::size_t j = 0; j < d; ++j) g.values[ix.b_final][j] += dout(i, j);
    Mat dh = ln_backward(mm_nt(dout, p.values[ix.w_final], d), cache.lnf, p.values[ix.lnf_g], g.values[ix.lnf_g],
                         g.values[ix.lnf_b]);

    std::vector<double> dbias(d, 0.0);
    std::vector<Mat> dskip(cfg.encoder_blocks, Mat(dh.r, d));
    std::size_t layer = model.layer_count();
    for (std::size_t bb = model.blocks.size(); bb-- > 0;) {
        const BlockIdx& bi = ix.blocks[bb];
        const BlockCache& bc = cache.blocks[bb];
        const std::size_t heads = model.blocks[bb].attn_s.heads;
        if (bb < cfg.encoder_blocks) add_to(dh, dskip[bb]);
        add_to(dh, mlp_backward(dh, p, g, bi, bc.mlp));
        if (bi.has_t) {
            --layer;
            add_to(dh, attn_backward(dh, p, g, bi.t, model.blocks_for(model.layers[layer].mode), heads, bc.t));
        }
        --layer;
        add_to(dh, attn_backward(dh, p, g, bi.s, model.blocks_for(model.layers[layer].mode), heads, bc.s));
        for (std::size_t i = 0; i < dh.r; ++i)
            for (std::size_t j = 0; j < d; ++j) dbias[j] += dh(i, j);
        const int src = model.skip_source(bb);
        if (src >= 0) add_to(dskip[static_cast<std::size_t>(src)], dh);
    }
    auto& gw = g.values[ix.w_cond];
    for (std::size_t i = 0; i < d; ++i) {
        const double e = s.cond.embedding[i];
        for (std::size_t j = 0; j < d; ++j) gw[i * d + j] += e * dbias[j];
    }
}

bool fixed_tensor(const std::string& name) { return !is_trainable(name); }

}  // namespace

ParamSet ParamSet::from_model(const ToyVDM& model) {
    ParamSet p;
    for (const auto& [name, t] : named_tensors(model)) {
        p.names.push_back(name);
        p.dims.push_back(t->dims());
        p.values.emplace_back(t->data().begin(), t->data().end());
    }
    return p;
}

ParamSet ParamSet::zeros_like() const {
    ParamSet z = *this;
    for (auto& v : z.values) std::fill(v.begin(), v.end(), 0.0);
    return z;
}

void ParamSet::store(ToyVDM& model) const {
    auto named = named_tensors(model);
    if (named.size() != names.size()) throw ShapeError("parameter set does not match model");
    for (std::size_t i = 0; i < named.size(); ++i) {
        Tensor& t = *named[i].second;
        if (named[i].first != names[i] || t.size() != values[i].size())
            throw ShapeError("parameter set does not match model at " + names[i]);
        for (std::size_t e = 0; e < t.size(); ++e) t[e] = static_cast<float>(values[i][e]);
    }
}

std::size_t ParamSet::find(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return i;
    throw ShapeError("no parameter named " + std::string(name));
}

Tensor moving_square_latent(const ModelConfig& cfg, SeededRng& rng, Condition* cond_out) {
    static const char* const kPrompts[] = {"a red square drifting", "a green square sliding", "a blue block moving",
                                           "a bright tile gliding"};
    const auto pick = static_cast<std::size_t>(rng.uniform() * 4.0) % 4;
    Condition cond = embed_prompt(kPrompts[pick], cfg.channels);
    const std::size_t s = cfg.size, side = std::max<std::size_t>(1, s / 2);
    const auto x0 = static_cast<long>(rng.uniform() * static_cast<double>(s));
    const auto y0 = static_cast<long>(rng.uniform() * static_cast<double>(s));
    const long dx = static_cast<long>(rng.uniform() * 3.0) - 1;
    const long dy = static_cast<long>(rng.uniform() * 3.0) - 1;
    const double amp = std::sqrt(static_cast<double>(cfg.channels));
    const auto sl = static_cast<long>(s);
    Tensor x(cfg.latent_dims());
    for (std::size_t f = 0; f < cfg.frames; ++f) {
        const long ox = x0 + dx * static_cast<long>(f), oy = y0 + dy * static_cast<long>(f);
        for (std::size_t yy = 0; yy < side; ++yy) {
            for (std::size_t xx = 0; xx < side; ++xx) {
                const auto py = static_cast<std::size_t>(((oy + static_cast<long>(yy)) % sl + sl) % sl);
                const auto px = static_cast<std::size_t>(((ox + static_cast<long>(xx)) % sl + sl) % sl);
                for (std::size_t c = 0; c < cfg.channels; ++c)
                    x[((f * cfg.channels + c) * s + py) * s + px] = static_cast<float>(amp * cond.embedding[c]);
            }
        }
    }
    // A tenth of the examples drop the prompt, so the null condition is trained too.
    if (rng.uniform() < 0.1) cond = Condition::null(cfg.channels);
    if (cond_out) *cond_out = std::move(cond);
    return x;
}

std::vector<TrainSample> make_batch(const ModelConfig& cfg, SeededRng& rng, std::size_t n) {
    const NoiseSchedule sched = make_schedule(1, cfg.train_steps);
    std::vector<TrainSample> out;
    for (std::size_t i = 0; i < n; ++i) {
        TrainSample s;
        const Tensor x0 = moving_square_latent(cfg, rng, &s.cond);
        s.t = 1 + static_cast<int>(rng.uniform() * cfg.train_steps) % cfg.train_steps;
        s.eps = gaussian(rng, cfg.latent_dims());
        const double ab = sched.alpha_bar(s.t);
        const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
        s.x_t = Tensor(cfg.latent_dims());
        for (std::size_t e = 0; e < x0.size(); ++e) s.x_t[e] = static_cast<float>(a * x0[e] + b * s.eps[e]);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> forward_double(const ToyVDM& model, const ParamSet& params, const TrainSample& s) {
    const Index ix = resolve(params, model);
    Cache cache;
    return from_tokens(forward(model, params, ix, s, cache), model.config);
}

double loss_and_grad(const ToyVDM& model, const ParamSet& params, const std::vector<TrainSample>& batch,
                     ParamSet* grads) {
    if (batch.empty()) throw DomainError("empty training batch");
    const Index ix = resolve(params, model);
    if (grads) *grads = params.zeros_like();
    double loss = 0.0;
    const std::size_t total = batch.size() * batch.front().eps.size();
    for (const auto& s : batch) {
        Cache cache;
        const Mat pred = forward(model, params, ix, s, cache);
        const Mat target = to_tokens(s.eps, model.config);
        Mat dout(pred.r, pred.c);
        for (std::size_t e = 0; e < pred.v.size(); ++e) {
            const double diff = pred.v[e] - target.v[e];
            loss += diff * diff;
            dout.v[e] = 2.0 * diff / static_cast<double>(total);
        }
        if (grads) backward(model, params, ix, s, cache, dout, *grads);
    }
    if (grads) {
        for (std::size_t i = 0; i < grads->names.size(); ++i)
            if (fixed_tensor(grads->names[i])) std::fill(grads->values[i].begin(), grads->values[i].end(), 0.0);
    }
    return loss / static_cast<double>(total);
}

TrainResult train(ToyVDM& model, const TrainConfig& cfg, const std::function<void(int, double)>& progress) {
    if (cfg.steps < 0) throw TrainingError("negative step count");
    if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw TrainingError("learning rate must be finite and >= 0");
    if (cfg.batch == 0) throw TrainingError("batch size must be positive");
    const SeededRng root(cfg.seed);
    SeededRng eval_rng = root.derive("train.eval");
    SeededRng data_rng = root.derive("train.data");
    const std::vector<TrainSample> eval = make_batch(model.config, eval_rng, std::max<std::size_t>(1, cfg.eval_batch));

    ParamSet params = ParamSet::from_model(model);
    ParamSet m = params.zeros_like(), v = params.zeros_like(), grads;
    TrainResult result;
    result.eval_loss_initial = loss_and_grad(model, params, eval, nullptr);
    double b1t = 1.0, b2t = 1.0;
    for (int step = 1; step <= cfg.steps; ++step) {
        const auto batch = make_batch(model.config, data_rng, cfg.batch);
        const double loss = loss_and_grad(model, params, batch, &grads);
        if (!std::isfinite(loss)) throw TrainingError("loss diverged at step " + std::to_string(step));
        result.losses.push_back(loss);
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for (std::size_t i = 0; i < params.values.size(); ++i) {
            if (fixed_tensor(params.names[i])) continue;
            auto& pv = params.values[i];
            for (std::size_t e = 0; e < pv.size(); ++e) {
                const double gr = grads.values[i][e];
                m.values[i][e] = cfg.beta1 * m.values[i][e] + (1.0 - cfg.beta1) * gr;
                v.values[i][e] = cfg.beta2 * v.values[i][e] + (1.0 - cfg.beta2) * gr * gr;
                const double mh = m.values[i][e] / (1.0 - b1t);
                const double vh = v.values[i][e] / (1.0 - b2t);
                pv[e] -= cfg.lr * mh / (std::sqrt(vh) + cfg.adam_eps);
            }
        }
        if (progress) progress(step, loss);
    }
    params.store(model);
    result.eval_loss_final = loss_and_grad(model, params, eval, nullptr);
    return result;
}

}  // namespace ieadapt
