#include "sslchrono/model.hpp"

namespace sslchrono {

void ModelConfig::validate() const {
    if (n_blocks < 1) config_error("n_blocks must be >= 1");
    if (d_model < 1) config_error("d_model must be >= 1");
    if (n_heads < 1 || d_model % n_heads != 0)
        config_error("d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" +
                     std::to_string(n_heads) + ")");
    if (seq_len < 2) config_error("seq_len must be >= 2");
    if (n_channels < 1) config_error("n_channels must be >= 1");
    if (dropout_p < 0.0 || dropout_p >= 1.0) config_error("dropout_p must lie in [0, 1)");
}

std::vector<NamedParam> ModelParams::named() const {
    std::vector<NamedParam> out;
    out.push_back({"input_proj.w", input_w, false});
    out.push_back({"input_proj.b", input_b, false});
    out.push_back({"pos_emb", pos_emb, false});
    for (size_t i = 0; i < blocks.size(); ++i) {
        const std::string prefix = "block" + std::to_string(i) + ".";
        const BlockParams& b = blocks[i];
        out.push_back({prefix + "attn.w_q", b.attn.w_q, false});
        out.push_back({prefix + "attn.b_q", b.attn.b_q, false});
        out.push_back({prefix + "attn.w_k", b.attn.w_k, false});
        out.push_back({prefix + "attn.b_k", b.attn.b_k, false});
        out.push_back({prefix + "attn.w_v", b.attn.w_v, false});
        out.push_back({prefix + "attn.b_v", b.attn.b_v, false});
        out.push_back({prefix + "attn.w_o", b.attn.w_o, false});
        out.push_back({prefix + "attn.b_o", b.attn.b_o, false});
        out.push_back({prefix + "ln.gamma", b.ln_gamma, false});
        out.push_back({prefix + "ln.beta", b.ln_beta, false});
    }
    out.push_back({"head.w", head.weight, true});
    out.push_back({"head.b", head.bias, true});
    return out;
}

std::vector<Tensor> ModelParams::all_tensors() const {
    std::vector<Tensor> out;
    for (const auto& p : named()) out.push_back(p.tensor);
    return out;
}

std::vector<Tensor> ModelParams::backbone_tensors() const {
    std::vector<Tensor> out;
    for (const auto& p : named())
        if (!p.is_head) out.push_back(p.tensor);
    return out;
}

std::vector<Tensor> ModelParams::head_tensors() const {
    std::vector<Tensor> out;
    for (const auto& p : named())
        if (p.is_head) out.push_back(p.tensor);
    return out;
}

namespace {

Tensor normal_matrix(int64_t rows, int64_t cols, Rng& rng) {
    std::vector<float> data(static_cast<size_t>(rows * cols));
    for (auto& v : data) v = static_cast<float>(rng.normal(0.0, kInitStd));
    Tensor t = Tensor::from({rows, cols}, std::move(data), true);
    return t;
}

Tensor zero_vector(int64_t n) { return Tensor::filled({n}, 0.0f, true); }

HeadParams init_head(const ModelConfig& config, HeadKind kind, Rng& rng) {
    HeadParams head;
    const int64_t w = kind == HeadKind::kRegression ? 1 : 2;
    head.weight = normal_matrix(config.d_model, w, rng);
    head.bias = zero_vector(w);
    return head;
}

}  // namespace

ModelParams init_params(const ModelConfig& config, Rng& rng) {
    config.validate();
    ModelParams p;
    p.config = config;
    p.input_w = normal_matrix(config.n_channels, config.d_model, rng);
    p.input_b = zero_vector(config.d_model);
    p.pos_emb = normal_matrix(config.seq_len, config.d_model, rng);
    p.blocks.resize(static_cast<size_t>(config.n_blocks));
    for (auto& b : p.blocks) {
        b.attn.w_q = normal_matrix(config.d_model, config.d_model, rng);
        b.attn.b_q = zero_vector(config.d_model);
        b.attn.w_k = normal_matrix(config.d_model, config.d_model, rng);
        b.attn.b_k = zero_vector(config.d_model);
        b.attn.w_v = normal_matrix(config.d_model, config.d_model, rng);
        b.attn.b_v = zero_vector(config.d_model);
        b.attn.w_o = normal_matrix(config.d_model, config.d_model, rng);
        b.attn.b_o = zero_vector(config.d_model);
        b.ln_gamma = Tensor::filled({config.d_model}, 1.0f, true);
        b.ln_beta = zero_vector(config.d_model);
    }
    p.head = init_head(config, config.head_kind, rng);
    return p;
}

ModelParams clone_params(const ModelParams& params) {
    ModelParams out;
    out.config = params.config;
    out.input_w = params.input_w.clone();
    out.input_b = params.input_b.clone();
    out.pos_emb = params.pos_emb.clone();
    out.blocks.reserve(params.blocks.size());
    for (const auto& b : params.blocks) {
        BlockParams nb;
        nb.attn.w_q = b.attn.w_q.clone();
        nb.attn.b_q = b.attn.b_q.clone();
        nb.attn.w_k = b.attn.w_k.clone();
        nb.attn.b_k = b.attn.b_k.clone();
        nb.attn.w_v = b.attn.w_v.clone();
        nb.attn.b_v = b.attn.b_v.clone();
        nb.attn.w_o = b.attn.w_o.clone();
        nb.attn.b_o = b.attn.b_o.clone();
        nb.ln_gamma = b.ln_gamma.clone();
        nb.ln_beta = b.ln_beta.clone();
        out.blocks.push_back(std::move(nb));
    }
    out.head.weight = params.head.weight.clone();
    out.head.bias = params.head.bias.clone();
    return out;
}

ModelParams swap_head(const ModelParams& params, HeadKind new_kind, Rng& rng) {
    ModelParams out = clone_params(params);
    out.config.head_kind = new_kind;
    out.head = init_head(out.config, new_kind, rng);
    return out;
}

uint64_t backbone_checksum(const ModelParams& params) {
    uint64_t h = 1469598103934665603ULL;  // FNV-1a offset basis
    auto feed = [&h](const void* bytes, size_t n) {
        const unsigned char* p = static_cast<const unsigned char*>(bytes);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& p : params.named()) {
        if (p.is_head) continue;
        auto v = p.tensor.data();
        feed(v.data(), v.size() * sizeof(float));
    }
    return h;
}

Tensor embed(Tape& tape, const Tensor& window, const ModelParams& params) {
    const ModelConfig& cfg = params.config;
    if (window.rank() != 2 || window.dim(0) != cfg.seq_len || window.dim(1) != cfg.n_channels)
        shape_error("embed: window shape " + shape_str(window.shape()) + " does not match [" +
                    std::to_string(cfg.seq_len) + "x" + std::to_string(cfg.n_channels) + "]");
    Tensor projected = add_row_bias(tape, matmul(tape, window, params.input_w), params.input_b);
    return add(tape, projected, params.pos_emb);
}

Tensor attention(Tape& tape, const Tensor& q, const Tensor& k, const Tensor& v, bool causal) {
    if (q.shape() != k.shape() || q.shape() != v.shape())
        shape_error("attention: Q, K, V shapes must agree, got " + shape_str(q.shape()) + ", " +
                    shape_str(k.shape()) + ", " + shape_str(v.shape()));
    const int64_t d_k = q.dim(1);
    Tensor scores = scale(tape, matmul(tape, q, transpose(tape, k)),
                          static_cast<float>(1.0 / std::sqrt(static_cast<double>(d_k))));
    if (causal) scores = causal_mask_fill(tape, scores);
    Tensor weights = softmax(tape, scores, -1);
    return matmul(tape, weights, v);
}

namespace {

Tensor multi_head_attention(Tape& tape, const Tensor& x, const AttentionParams& attn,
                            const ModelConfig& cfg) {
    Tensor q = add_row_bias(tape, matmul(tape, x, attn.w_q), attn.b_q);
    Tensor k = add_row_bias(tape, matmul(tape, x, attn.w_k), attn.b_k);
    Tensor v = add_row_bias(tape, matmul(tape, x, attn.w_v), attn.b_v);
    Tensor mixed;
    if (cfg.n_heads == 1) {
        mixed = attention(tape, q, k, v, /*causal=*/true);
    } else {
        const int64_t d_k = cfg.head_dim();
        std::vector<Tensor> heads;
        heads.reserve(static_cast<size_t>(cfg.n_heads));
        for (int h = 0; h < cfg.n_heads; ++h) {
            const int64_t off = static_cast<int64_t>(h) * d_k;
            heads.push_back(attention(tape, slice_cols(tape, q, off, d_k),
                                      slice_cols(tape, k, off, d_k),
                                      slice_cols(tape, v, off, d_k), /*causal=*/true));
        }
        mixed = concat_cols(tape, heads);
    }
    return add_row_bias(tape, matmul(tape, mixed, attn.w_o), attn.b_o);
}

}  // namespace

Tensor block_forward(Tape& tape, const Tensor& x, const BlockParams& block,
                     const ModelConfig& cfg, Mode mode, Rng& rng) {
    Tensor attn_out = multi_head_attention(tape, x, block.attn, cfg);
    Tensor h = cfg.residual ? add(tape, x, attn_out) : attn_out;
    h = dropout(tape, h, cfg.dropout_p, mode, rng);
    h = relu(tape, h);
    return layer_norm(tape, h, block.ln_gamma, block.ln_beta);
}

Tensor backbone_forward(Tape& tape, const Tensor& window, const ModelParams& params, Mode mode,
                        Rng& rng) {
    Tensor x = embed(tape, window, params);
    for (const auto& block : params.blocks) x = block_forward(tape, x, block, params.config, mode, rng);
    return row(tape, x, params.config.seq_len - 1);
}

Tensor apply_head(Tape& tape, const Tensor& rep, const HeadParams& head) {
    return add_row_bias(tape, matmul(tape, rep, head.weight), head.bias);
}

Tensor forward(Tape& tape, const Tensor& window, const ModelParams& params, Mode mode, Rng& rng) {
    Tensor rep = backbone_forward(tape, window, params, mode, rng);
    return apply_head(tape, rep, params.head);
}

}  // namespace sslchrono
