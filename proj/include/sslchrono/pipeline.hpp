#pragma once

#include <string>

#include "sslchrono/run_config.hpp"
#include "sslchrono/study_io.hpp"

// Dataset/split/stat file conventions shared by the CLI commands, plus the
// seed streams that commands use so rerunning a stage reproduces it exactly.

namespace sslchrono {

// Seed stream ids hung off the master seed (see also the sweep's streams in
// eval.cpp, ids 100-600).
enum PipelineSeedStream : uint64_t {
    kSeedSplitStream = 50,
    kSeedCliFinetune = 1000,  // + adaptation size
};

inline std::string dataset_path(const std::string& dir) { return dir + "/dataset.csv"; }
inline std::string stats_path(const std::string& dir) { return dir + "/stats.csv"; }
inline std::string splits_path(const std::string& dir) { return dir + "/splits.csv"; }

struct StudyData {
    std::vector<ParticipantSeries> cohort_std;  // standardized with stored stats
    CohortSplit split;
    FeatureStats stats;
};

// Generates the cohort, splits it, computes standardization statistics on the
// pretraining participants only, and writes dataset/stats/splits files.
void generate_study(const RunConfig& cfg);

// Loads the three files written by generate_study and standardizes the cohort
// with the stored statistics.
StudyData load_study(const RunConfig& cfg);

// In-memory equivalent of generate_study followed by load_study; float values
// round-trip the CSVs exactly, so both paths agree bitwise.
StudyData build_study(const RunConfig& cfg);

}  // namespace sslchrono
