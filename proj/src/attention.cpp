// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#include "ieadapt/attention.hpp"

#include <cmath>
#include <sstream>

#include "ieadapt/errors.hpp"
#include "ieadapt/ops.hpp"

namespace ieadapt {

std::string_view to_string(AttentionMode mode) {
    switch (mode) {
        case AttentionMode::spatial: return "spatial";
        case AttentionMode::temporal: return "temporal";
        case AttentionMode::full3d: return "full3d";
    }
    return "?";
}

AttentionMode parse_attention_mode(std::string_view text) {
    if (text == "spatial") return AttentionMode::spatial;
    if (text == "temporal") return AttentionMode::temporal;
    if (text == "full3d") return AttentionMode::full3d;
    throw ConfigError("unknown attention mode '" + std::string(text) + "'");
}

void AttentionWeights::validate() const {
    const std::size_t d = d_model();
    for (const Tensor* m : {&w_q, &w_k, &w_v, &w_out}) {
        if (m->rank() != 2 || m->dim(0) != d || m->dim(1) != d) {
            throw ShapeError("attention weights must all be [D x D], got " + dims_to_string(m->dims()));
        }
    }
    if (d == 0 || heads == 0 || d % heads != 0) {
        throw ShapeError("heads (" + std::to_string(heads) + ") must divide D (" + std::to_string(d) + ")");
    }
}

void validate_stochastic(std::span<const float> rows, std::size_t n, double tol) {
    if (n == 0 || rows.size() % n != 0) throw ShapeError("stochastic check: ragged rows");
    for (std::size_t r = 0; r < rows.size() / n; ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const float a = rows[r * n + j];
            if (!(a >= 0.0f)) throw ValidationError("attention map has a negative or NaN entry");
            sum += a;
        }
        if (std::abs(sum - 1.0) > tol) {
            std::ostringstream os;
            os << "attention map row " << r << " sums to " << sum;
            throw ValidationError(os.str());
        }
    }
}

void validate_map(const AttentionMap& map, double tol) {
    require_rank(map.values, 3, "attention map");
    if (map.values.dim(1) != map.n_tokens || map.values.dim(2) != map.n_tokens) {
        throw ShapeError("attention map dims " + dims_to_string(map.values.dims()) + " vs N=" +
                         std::to_string(map.n_tokens));
    }
    validate_stochastic(map.values.data(), map.n_tokens, tol);
}

std::string describe(const ReplacementMatrix& r) {
    switch (r.kind) {
        case ReplacementKind::identity: return "I";
        case ReplacementKind::uniform: return "U";
        case ReplacementKind::blend: {
            std::ostringstream os;
            os << "blend(" << r.alpha << ")";
            return os.str();
        }
    }
    return "?";
}

Tensor materialize(const ReplacementMatrix& r, std::size_t n) {
    if (n == 0) throw ShapeError("materialize: N must be positive");
    Tensor m({n, n});
    const float u = 1.0f / static_cast<float>(n);
    switch (r.kind) {
        case ReplacementKind::identity:
            for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0f;
            break;
        case ReplacementKind::uniform:
            for (auto& v : m.data()) v = u;
            break;
        case ReplacementKind::blend: {
            if (!(r.alpha >= 0.0f && r.alpha <= 1.0f)) {
                throw DomainError("blend alpha must lie in [0,1]");
            }
            const float off = (1.0f - r.alpha) * u;
            const float diag = r.alpha + off;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) m.at(i, j) = i == j ? diag : off;
            break;
        }
    }
    return m;
}

AttentionResult attention_forward(const Tensor& x, const AttentionWeights& w, AttentionMode mode) {
    require_rank(x, 2, "attention_forward");
    w.validate();
    if (x.dim(1) != w.d_model()) throw ShapeError("attention_forward: feature dim differs from weights");
    if (x.dim(0) == 0) throw ShapeError("attention_forward: no tokens");
    const std::size_t n = x.dim(0);
    TokenBlocks tb;
    tb.mode = mode;
    tb.blocks = 1;
    tb.n = n;
    tb.index.resize(n);
    for (std::size_t i = 0; i < n; ++i) tb.index[i] = static_cast<std::uint32_t>(i);

    BlockedAttention att;
    att.project(x, w);
    att.compute_maps(tb, w.heads);
    att.mix(tb, w.heads);
    att.project_out(w);
    AttentionMap map{att.maps.reshaped({w.heads, n, n}), n, mode};
    return {std::move(att.out), std::move(map)};
}

Tensor apply_map(const Tensor& map_values, const Tensor& v) {
    require_rank(map_values, 2, "apply_map");
    if (map_values.dim(0) != map_values.dim(1)) throw ShapeError("apply_map: map must be square");
    validate_stochastic(map_values.data(), map_values.dim(1));
    return matmul(map_values, v);
}

TokenBlocks make_token_blocks(AttentionMode mode, std::size_t frames, std::size_t pixels) {
    TokenBlocks tb;
    tb.mode = mode;
    switch (mode) {
        case AttentionMode::spatial:
            tb.blocks = frames;
            tb.n = pixels;
            for (std::size_t f = 0; f < frames; ++f)
                for (std::size_t p = 0; p < pixels; ++p) tb.index.push_back(static_cast<std::uint32_t>(f * pixels + p));
            break;
        case AttentionMode::temporal:
            tb.blocks = pixels;
            tb.n = frames;
            for (std::size_t p = 0; p < pixels; ++p)
                for (std::size_t f = 0; f < frames; ++f) tb.index.push_back(static_cast<std::uint32_t>(f * pixels + p));
            break;
        case AttentionMode::full3d:
            tb.blocks = 1;
            tb.n = frames * pixels;
            for (std::size_t t = 0; t < frames * pixels; ++t) tb.index.push_back(static_cast<std::uint32_t>(t));
            break;
    }
    return tb;
}

Tensor latent_to_tokens(const Tensor& latent) {
    require_rank(latent, 4, "latent");
    const std::size_t f_n = latent.dim(0), c_n = latent.dim(1), hw = latent.dim(2) * latent.dim(3);
    Tensor tok({f_n * hw, c_n});
    for (std::size_t f = 0; f < f_n; ++f)
        for (std::size_t c = 0; c < c_n; ++c)
            for (std::size_t p = 0; p < hw; ++p) tok.at(f * hw + p, c) = latent[(f * c_n + c) * hw + p];
    return tok;
}

Tensor tokens_to_latent(const Tensor& tokens, const Dims& latent_dims) {
    if (latent_dims.size() != 4) throw ShapeError("latent dims must be [F x C x H x W]");
    const std::size_t f_n = latent_dims[0], c_n = latent_dims[1], hw = latent_dims[2] * latent_dims[3];
    if (tokens.rank() != 2 || tokens.dim(0) != f_n * hw || tokens.dim(1) != c_n) {
        throw ShapeError("tokens " + dims_to_string(tokens.dims()) + " do not match latent " +
                         dims_to_string(latent_dims));
    }
    Tensor lat(latent_dims);
    for (std::size_t f = 0; f < f_n; ++f)
        for (std::size_t c = 0; c < c_n; ++c)
            for (std::size_t p = 0; p < hw; ++p) lat[(f * c_n + c) * hw + p] = tokens.at(f * hw + p, c);
    return lat;
}

std::vector<Tensor> reshape_for_mode(const Tensor& latent, AttentionMode mode) {
    const Tensor tok = latent_to_tokens(latent);
    const std::size_t c_n = latent.dim(1);
    const TokenBlocks tb = make_token_blocks(mode, latent.dim(0), latent.dim(2) * latent.dim(3));
    std::vector<Tensor> out;
    out.reserve(tb.blocks);
    for (std::size_t b = 0; b < tb.blocks; ++b) {
        Tensor blk({tb.n, c_n});
        for (std::size_t i = 0; i < tb.n; ++i) {
            const auto src = tok.row(tb.index[b * tb.n + i]);
            std::copy(src.begin(), src.end(), blk.row(i).begin());
        }
        out.push_back(std::move(blk));
    }
    return out;
}

Tensor merge_from_mode(const std::vector<Tensor>& blocks, AttentionMode mode, const Dims& latent_dims) {
    if (latent_dims.size() != 4) throw ShapeError("latent dims must be [F x C x H x W]");
    const TokenBlocks tb = make_token_blocks(mode, latent_dims[0], latent_dims[2] * latent_dims[3]);
    if (blocks.size() != tb.blocks) throw ShapeError("merge_from_mode: wrong block count");
    Tensor tok({latent_dims[0] * latent_dims[2] * latent_dims[3], latent_dims[1]});
    for (std::size_t b = 0; b < tb.blocks; ++b) {
        if (blocks[b].dims() != Dims{tb.n, latent_dims[1]}) throw ShapeError("merge_from_mode: block dims");
        for (std::size_t i = 0; i < tb.n; ++i) {
            const auto src = blocks[b].row(i);
            std::copy(src.begin(), src.end(), tok.row(tb.index[b * tb.n + i]).begin());
        }
    }
    return tokens_to_latent(tok, latent_dims);
}

void BlockedAttention::project(const Tensor& x, const AttentionWeights& w) {
    q = matmul(x, w.w_q);
    k = matmul(x, w.w_k);
    v = matmul(x, w.w_v);
}

void BlockedAttention::compute_maps(const TokenBlocks& tb, std::size_t heads) {
    const std::size_t d = q.dim(1);
    maps = Tensor({tb.blocks, heads, tb.n, tb.n});
    const float scale = 1.0f / std::sqrt(static_cast<float>(d / heads));
    kernels::omp::block_attention_maps(q.raw(), k.raw(), d, heads, tb.layout(), scale, maps.raw());
}

void BlockedAttention::overwrite_maps(const Tensor& replacement) {
    const std::size_t nn = replacement.size();
    for (std::size_t off = 0; off < maps.size(); off += nn)
        std::copy(replacement.data().begin(), replacement.data().end(), maps.data().begin() + off);
}

void BlockedAttention::mix(const TokenBlocks& tb, std::size_t heads) {
    mixed = Tensor(v.dims());
    kernels::omp::block_apply_maps(maps.raw(), v.raw(), v.dim(1), heads, tb.layout(), mixed.raw());
}

void BlockedAttention::project_out(const AttentionWeights& w) { out = matmul(mixed, w.w_out); }

}  // namespace ieadapt
