// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ieadapt/kernels.hpp"
#include "ieadapt/tensor.hpp"

namespace ieadapt {

enum class AttentionMode { spatial, temporal, full3d };

std::string_view to_string(AttentionMode mode);
AttentionMode parse_attention_mode(std::string_view text);

/// Self-attention projections. Row-vector convention: Q = x * w_q.
struct AttentionWeights {
    Tensor w_q, w_k, w_v, w_out;  // each [D x D]
    std::size_t heads = 1;

    std::size_t d_model() const { return w_q.rank() == 2 ? w_q.dim(0) : 0; }
    std::size_t d_head() const { return d_model() / heads; }
    void validate() const;
};

/// Row-stochastic attention map of one token block, one [N x N] slice per head.
struct AttentionMap {
    Tensor values;  // [heads x N x N]
    std::size_t n_tokens = 0;
    AttentionMode mode = AttentionMode::spatial;

    std::size_t heads() const { return values.rank() == 3 ? values.dim(0) : 0; }
};

/// Throws ValidationError unless every entry is >= 0 and every row sums to 1 within `tol`.
void validate_stochastic(std::span<const float> rows, std::size_t n, double tol = 1e-5);
void validate_map(const AttentionMap& map, double tol = 1e-5);

enum class ReplacementKind { identity, uniform, blend };

/// Stand-in for an attention map: I, U (all 1/N) or alpha*I + (1-alpha)*U.
struct ReplacementMatrix {
    ReplacementKind kind = ReplacementKind::identity;
    float alpha = 1.0f;

    static ReplacementMatrix identity() { return {ReplacementKind::identity, 1.0f}; }
    static ReplacementMatrix uniform() { return {ReplacementKind::uniform, 0.0f}; }
    static ReplacementMatrix blend(float alpha) { return {ReplacementKind::blend, alpha}; }
};

std::string describe(const ReplacementMatrix& r);

/// [N x N] matrix for `r`. blend(1) is bit-identical to identity and blend(0) to uniform.
Tensor materialize(const ReplacementMatrix& r, std::size_t n);

struct AttentionResult {
    Tensor out;  // [N x D]
    AttentionMap map;
};

/// Single token block: map = softmax(Q K^T / sqrt(d_head)) per head,
/// out = concat_h(map_h V_h) * w_out.
AttentionResult attention_forward(const Tensor& x, const AttentionWeights& w,
                                  AttentionMode mode = AttentionMode::spatial);

/// Plain product map * v after checking that `map_values` is row-stochastic.
Tensor apply_map(const Tensor& map_values, const Tensor& v);

// ---------------------------------------------------------------------------
// Token blocks. A video latent [F x C x H x W] is viewed as F*H*W tokens of C
// features, token index f*H*W + p. Spatial attention mixes the H*W tokens of
// one frame, temporal attention the F tokens at one location, full3d all.

struct TokenBlocks {
    AttentionMode mode = AttentionMode::spatial;
    std::size_t blocks = 0;
    std::size_t n = 0;
    std::vector<std::uint32_t> index;  // [blocks x n] token rows

    kernels::BlockLayout layout() const { return {index.data(), blocks, n}; }
};

TokenBlocks make_token_blocks(AttentionMode mode, std::size_t frames, std::size_t pixels);

/// Latent [F x C x H x W] -> per-block [n x C] tensors.
std::vector<Tensor> reshape_for_mode(const Tensor& latent, AttentionMode mode);
/// Inverse of reshape_for_mode for the given latent dims.
Tensor merge_from_mode(const std::vector<Tensor>& blocks, AttentionMode mode, const Dims& latent_dims);

/// Latent [F x C x H x W] <-> token-major [F*H*W x C].
Tensor latent_to_tokens(const Tensor& latent);
Tensor tokens_to_latent(const Tensor& tokens, const Dims& latent_dims);

/// Blocked attention over token-major activations, split into the stages a
/// hook needs to intercept.
struct BlockedAttention {
    Tensor q, k, v;  // [T x D]
    Tensor maps;     // [blocks x heads x N x N]
    Tensor mixed;    // maps applied to v, [T x D]
    Tensor out;      // mixed * w_out

    void project(const Tensor& x, const AttentionWeights& w);
    void compute_maps(const TokenBlocks& tb, std::size_t heads);
    void overwrite_maps(const Tensor& replacement_nxn);
    void mix(const TokenBlocks& tb, std::size_t heads);
    void project_out(const AttentionWeights& w);
};

}  // namespace ieadapt
