#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sslchrono/cohort.hpp"
#include "sslchrono/model.hpp"
#include "sslchrono/train.hpp"

// ROC-AUC scoring and the adaptation-size sweep: pretrain once per objective,
// adapt at each nested set size, score the held-out test participants.

namespace sslchrono {

struct ScoredSet {
    std::vector<float> scores;  // predicted positive-class probabilities
    std::vector<int> labels;
    std::vector<int> participant_ids;
};

// Probability that a random positive outranks a random negative, ties counted
// half (Mann-Whitney), computed via a single sort. Errors on single-class
// input.
double auc(const ScoredSet& set);

// Eval-mode scoring of classification windows; scores are the positive-class
// softmax probabilities.
ScoredSet score_test_set(const ModelParams& model, const std::vector<WindowSample>& windows);

struct SweepCell {
    std::string objective;  // rhr | tib | cal | random_init
    int n_adaptation = 0;
    double auc_value = 0.0;
    uint64_t seed = 0;
    std::optional<double> paper_reference;
    bool ok = true;
    std::string error;
};

struct ObjectiveRun {
    std::string objective;
    TrainReport pretrain_report;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::vector<ObjectiveRun> pretrain_runs;  // one per objective, in grid order

    const SweepCell* find(const std::string& objective, int n) const;
    const ObjectiveRun* find_run(const std::string& objective) const;
    bool all_ok() const;
};

struct SweepSetup {
    ModelConfig model;
    TrainConfig pretrain_cfg;   // regression objective, all parameters
    TrainConfig finetune_cfg;   // head-only adaptation
    std::vector<int> adaptation_sizes = {25, 50, 100, 200, 400};
    int neg_ratio = 5;
    bool include_baseline = false;
    int threads = 1;
    uint64_t master_seed = 42;
};

// Published reference AUC for an (objective, size) cell, when one exists.
std::optional<double> reference_auc(const std::string& objective, int n_adaptation);

// Runs the full grid on a standardized cohort. Per-cell failures are recorded
// and the remaining cells still complete. Each objective pretrains once and
// reuses the checkpoint across adaptation sizes.
SweepResult run_sweep(std::span<const ParticipantSeries> cohort_std, const CohortSplit& split,
                      const SweepSetup& setup);

// Same adaptation/scoring protocol on a never-pretrained random backbone.
std::vector<SweepCell> baseline_random_backbone(std::span<const ParticipantSeries> cohort_std,
                                                const CohortSplit& split, const SweepSetup& setup);

}  // namespace sslchrono
