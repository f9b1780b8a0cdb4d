#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslchrono/tensor.hpp"

// Decoder-only sequence model: input projection + learned position
// embeddings, N blocks of causal self-attention followed by dropout, ReLU and
// LayerNorm, and a swappable regression or two-class head read from the last
// time position.

namespace sslchrono {

enum class HeadKind { kRegression, kClassification };

inline const char* head_kind_name(HeadKind k) {
    return k == HeadKind::kRegression ? "regression" : "classification";
}

struct ModelConfig {
    int n_blocks = 4;
    int d_model = 64;
    int n_heads = 1;
    int seq_len = 10;
    int n_channels = 6;
    double dropout_p = 0.1;
    bool residual = true;
    HeadKind head_kind = HeadKind::kRegression;

    int head_dim() const { return d_model / n_heads; }
    int head_width() const { return head_kind == HeadKind::kRegression ? 1 : 2; }
    void validate() const;
};

struct AttentionParams {
    Tensor w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
};

struct BlockParams {
    AttentionParams attn;
    Tensor ln_gamma, ln_beta;
};

struct HeadParams {
    Tensor weight;  // d_model x head_width
    Tensor bias;    // head_width
};

struct NamedParam {
    std::string name;
    Tensor tensor;
    bool is_head;
};

struct ModelParams {
    ModelConfig config;
    Tensor input_w;  // n_channels x d_model
    Tensor input_b;  // d_model
    Tensor pos_emb;  // seq_len x d_model
    std::vector<BlockParams> blocks;
    HeadParams head;

    // Fixed-order named view of every parameter; the backbone/head partition
    // is exhaustive and disjoint.
    std::vector<NamedParam> named() const;
    std::vector<Tensor> all_tensors() const;
    std::vector<Tensor> backbone_tensors() const;
    std::vector<Tensor> head_tensors() const;
};

inline constexpr float kInitStd = 0.02f;

ModelParams init_params(const ModelConfig& config, Rng& rng);

// Deep copy (values duplicated, gradients dropped).
ModelParams clone_params(const ModelParams& params);

// Replaces the head with a freshly initialized one of the requested kind;
// backbone tensors are copied bit for bit.
ModelParams swap_head(const ModelParams& params, HeadKind new_kind, Rng& rng);

// FNV-1a over the value bytes of the backbone parameters in named order.
uint64_t backbone_checksum(const ModelParams& params);

// window (seq_len x n_channels) -> seq_len x d_model
Tensor embed(Tape& tape, const Tensor& window, const ModelParams& params);

// Scaled dot-product attention for one head; masked positions (j > i) receive
// exactly zero weight when causal is set.
Tensor attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v, bool causal);

Tensor block_forward(Tape& tape, const Tensor& x, const BlockParams& block,
                     const ModelConfig& config, Mode mode, Rng& rng);

// embed -> blocks -> representation at the last time position (1 x d_model).
Tensor backbone_forward(Tape& tape, const Tensor& window, const ModelParams& params, Mode mode,
                        Rng& rng);

// Full model output: 1 x 1 (regression) or 1 x 2 logits (classification).
Tensor forward(Tape& tape, const Tensor& window, const ModelParams& params, Mode mode, Rng& rng);

Tensor apply_head(Tape& tape, const Tensor& rep, const HeadParams& head);

}  // namespace sslchrono
