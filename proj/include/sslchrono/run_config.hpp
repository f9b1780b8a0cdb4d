#pragma once

#include <map>
#include <string>
#include <vector>

#include "sslchrono/cohort.hpp"
#include "sslchrono/eval.hpp"
#include "sslchrono/model.hpp"
#include "sslchrono/train.hpp"

// key=value run configuration. Precedence: built-in defaults < config file <
// SSLCHRONO_SEED environment variable (seed only) < command-line overrides.
// Every command writes its fully resolved configuration next to its outputs.

namespace sslchrono {

struct RunConfig {
    uint64_t seed = 42;
    std::string out_dir = "out";

    CohortParams cohort;
    ModelConfig model;

    int pretrain_epochs = 50;
    int finetune_epochs = 30;
    int batch_size = 64;
    double pretrain_lr0 = 1e-3;
    double finetune_lr0 = 3e-3;
    double clip = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    std::vector<int> adaptation_sizes = {25, 50, 100, 200, 400};
    int test_participants = 64;
    int neg_ratio = 5;
    bool sweep_baseline = false;
    int threads = 2;

    // Applies one "key=value" assignment; unknown keys are an error.
    void apply(const std::string& key, const std::string& value);

    // Fully resolved view, sorted by key.
    std::map<std::string, std::string> to_map() const;

    void write(const std::string& path) const;

    TrainConfig pretrain_config() const;
    TrainConfig finetune_config() const;
    SweepSetup sweep_setup() const;

    void validate() const;
};

// Loads defaults, then the optional config file, then the environment seed
// override, then explicit key=value overrides (later wins).
RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& overrides);

}  // namespace sslchrono
