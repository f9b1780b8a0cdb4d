#pragma once

#include <string>
#include <vector>

#include "sslchrono/cohort.hpp"
#include "sslchrono/eval.hpp"
#include "sslchrono/train.hpp"

// File formats shared by the CLI commands. All CSVs use '.' decimals, LF line
// endings and locale-independent formatting; floats round-trip exactly.

namespace sslchrono {

inline constexpr const char* kDatasetHeader =
    "participant_id,day,rhr,tib,cal,rhr_missing,tib_missing,cal_missing,ili_positive";

std::string fmt_float(float v);
std::string fmt_double(double v);

void write_dataset_csv(const std::string& path, std::span<const ParticipantSeries> cohort);
std::vector<ParticipantSeries> load_dataset_csv(const std::string& path);

void write_stats_csv(const std::string& path, const FeatureStats& stats);
FeatureStats load_stats_csv(const std::string& path);

void write_splits_csv(const std::string& path, const CohortSplit& split);
CohortSplit load_splits_csv(const std::string& path);

void write_train_report_csv(const std::string& path, const TrainReport& report);

void write_sweep_csv(const std::string& path, const SweepResult& result);
SweepResult load_sweep_csv(const std::string& path);

void write_scores_csv(const std::string& path, const ScoredSet& scored,
                      const std::vector<int>& window_end_days);

std::string read_file(const std::string& path);

}  // namespace sslchrono
