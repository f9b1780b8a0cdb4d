#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sslchrono/cohort.hpp"
#include "sslchrono/model.hpp"

// Optimization machinery and the two training loops: pretraining on next-day
// feature regression and frozen-backbone adaptation of a fresh classification
// head, both with Adam, per-step cosine annealing and global-norm clipping.

namespace sslchrono {

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    double lr0 = 1e-3;
    double clip = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    uint64_t seed = 0;

    void validate() const;
};

struct TrainReport {
    std::vector<double> epoch_loss;       // mean loss per epoch
    std::vector<double> lr_trace;         // one entry per step
    std::vector<double> grad_norm_trace;  // post-clip global norm per step
    double wall_time_seconds = 0.0;
    std::vector<std::string> warnings;
};

// lr0 * 0.5 * (1 + cos(pi * step / total_steps)), no warmup or restarts.
double cosine_lr(int64_t step, int64_t total_steps, double lr0);

struct AdamState {
    std::vector<std::vector<float>> m;
    std::vector<std::vector<float>> v;
    int64_t t = 0;
};

AdamState adam_init(std::span<const Tensor> params);

// One Adam update over `params` using their accumulated gradients; tensors
// without a gradient buffer are left unchanged. Update math runs in double.
void adam_step(std::span<Tensor> params, AdamState& state, double lr, const TrainConfig& cfg);

// Pretraining: train-mode forward, MSE against the next-day target, all
// parameters updated. Returns trained parameters (the input is not mutated).
std::pair<ModelParams, TrainReport> pretrain(const ModelParams& init,
                                             const std::vector<WindowSample>& windows,
                                             const TrainConfig& cfg);

// Head-only training on fixed representations; shared by finetune and tests.
std::pair<HeadParams, TrainReport> train_classifier_head(const std::vector<std::vector<float>>& reps,
                                                         const std::vector<int>& labels,
                                                         const TrainConfig& cfg, Rng& head_rng,
                                                         int d_model);

// Frozen-backbone adaptation: swaps in a fresh two-logit head, computes
// eval-mode representations once (the backbone is frozen, so they are fixed),
// and trains only the head. Backbone bits are untouched.
std::pair<ModelParams, TrainReport> finetune(const ModelParams& pretrained,
                                             const std::vector<WindowSample>& windows,
                                             const TrainConfig& cfg);

// Eval-mode last-position representation for one window.
std::vector<float> window_representation(const ModelParams& params, const WindowSample& window);

Tensor window_tensor(const WindowSample& window);

}  // namespace sslchrono
