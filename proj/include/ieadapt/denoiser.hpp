// Copyright (C) 2026 The ieadapt Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ieadapt/attention.hpp"
#include "ieadapt/registry.hpp"
#include "ieadapt/tensor.hpp"

namespace ieadapt {

enum class Topology { factorized, full3d };
enum class Stage { encoder, bottleneck, decoder };

std::string_view to_string(Topology t);
Topology parse_topology(std::string_view text);
std::string_view to_string(Stage s);

struct ModelConfig {
    std::size_t frames = 8;
    std::size_t channels = 16;
    std::size_t size = 8;  // H = W
    std::size_t encoder_blocks = 2;
    std::size_t bottleneck_blocks = 1;
    std::size_t decoder_blocks = 2;
    std::size_t heads = 1;
    Topology topology = Topology::factorized;
    std::uint64_t seed = 0;
    int train_steps = 1000;  // rows of the time-embedding table minus one

    std::size_t total_blocks() const { return encoder_blocks + bottleneck_blocks + decoder_blocks; }
    std::size_t attention_layers() const;
    Dims latent_dims() const { return {frames, channels, size, size}; }
    void validate() const;
};

struct LayerInfo {
    int index = 0;
    std::size_t block = 0;
    Stage stage = Stage::encoder;
    AttentionMode mode = AttentionMode::spatial;
    std::size_t n_tokens = 0;
};

struct BlockWeights {
    Tensor ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;  // [D]
    AttentionWeights attn_s;                          // spatial, or full3d
    AttentionWeights attn_t;                          // temporal; empty for full3d
    Tensor mlp_w1, mlp_b1, mlp_w2, mlp_b2;            // [D x 4D], [4D], [4D x D], [D]
};

/// Toy video denoiser: encoder / bottleneck / decoder block stack with
/// factorized spatial+temporal (or full-3D) self-attention, skip
/// connections from encoder to decoder blocks, additive timestep and prompt
/// conditioning, and a fixed latent-to-pixel decoder.
struct ToyVDM {
    ModelConfig config;
    std::vector<BlockWeights> blocks;
    Tensor time_table;          // [(train_steps + 1) x D], sinusoidal, fixed
    Tensor w_cond;              // [D x D]
    Tensor lnf_g, lnf_b;        // [D]
    Tensor w_final, b_final;    // [D x D], [D]
    Tensor dec_w, dec_b;        // [D x 3], [3], fixed
    std::vector<LayerInfo> layers;
    std::vector<TokenBlocks> token_blocks;  // indexed by AttentionMode

    std::size_t layer_count() const { return layers.size(); }
    const TokenBlocks& blocks_for(AttentionMode m) const { return token_blocks[static_cast<std::size_t>(m)]; }
    /// Encoder block paired with decoder block `dec_block`, or -1.
    int skip_source(std::size_t block) const;
    Registry make_registry() const { return Registry(layers.size()); }
};

/// Named view of every tensor in the model, in a fixed order.
std::vector<std::pair<std::string, Tensor*>> named_tensors(ToyVDM& model);
std::vector<std::pair<std::string, const Tensor*>> named_tensors(const ToyVDM& model);
/// Tensors the trainer updates (excludes the time table and the decoder).
bool is_trainable(std::string_view name);

ToyVDM init_model(const ModelConfig& cfg);
/// Rebuilds layer tables and token layouts after the config or weights were edited.
void finalize_structure(ToyVDM& model);

struct Condition {
    Tensor embedding;  // [D]
    bool is_null = true;

    static Condition null(std::size_t dim) { return {Tensor({dim}), true}; }
};

/// Deterministic stand-in for a text encoder: each whitespace token seeds a
/// Gaussian D-vector via its hash; vectors are mean-pooled and L2-normalized.
/// The empty (or blank) prompt is the null condition.
Condition embed_prompt(std::string_view text, std::size_t dim);

struct VideoLatent {
    Tensor x;  // [F x C x H x W]
    int t = 0;
};

struct ForwardHooks {
    const Registry* registry = nullptr;
    std::string branch = "cA";
    bool capture_outputs = false;  // keep each recorded layer's output
    bool capture_kv = false;       // keep keys/values of recorded layers
    HookLog* log = nullptr;
};

struct NoiseEstimate {
    Tensor eps;  // [F x C x H x W]
    std::vector<AttentionRecord> records;
};

NoiseEstimate predict_noise(const ToyVDM& model, const VideoLatent& latent, const Condition& cond,
                            const ForwardHooks& hooks = {});

/// Latent [F x C x H x W] -> video [F x 3 x 4H x 4W] in [-1, 1]: per-pixel
/// projection C -> 3, nearest-neighbour x4 upsampling, tanh.
Tensor decode(const ToyVDM& model, const Tensor& latent);
/// Largest factor by which decode can amplify an elementwise latent change.
double decode_lipschitz(const ToyVDM& model);
/// Least-squares inverse of decode for videos of the right shape.
Tensor encode_pseudo_inverse(const ToyVDM& model, const Tensor& video);

/// Weights as a directory of IEAD tensors plus `manifest.txt` (key=file).
void save_model(const ToyVDM& model, const std::filesystem::path& dir);
ToyVDM load_model(const std::filesystem::path& dir);

}  // namespace ieadapt
