#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sslchrono/rng.hpp"

// Synthetic daily-wearable cohort: per-participant baselines plus weekly
// seasonality and noise, triangular illness episodes that raise resting heart
// rate and time in bed and depress activity calories, lab confirmation 1-3
// days after onset, and feature-level missingness that increases during
// illness. Stands in for a private dataset; every knob is a parameter.

namespace sslchrono {

inline constexpr int kWindowDays = 10;
inline constexpr int kNumFeatures = 3;   // rhr, tib, cal
inline constexpr int kNumChannels = 6;   // features + missingness flags

enum class Feature { kRhr = 0, kTib = 1, kCal = 2 };

const char* feature_name(Feature f);
std::optional<Feature> feature_from_name(const std::string& name);

struct DayRecord {
    float rhr = 0.0f;
    float tib = 0.0f;
    float cal = 0.0f;
    uint8_t rhr_missing = 0;
    uint8_t tib_missing = 0;
    uint8_t cal_missing = 0;
    uint8_t ili_positive = 0;

    float value(Feature f) const;
    void set_value(Feature f, float v);
    uint8_t missing(Feature f) const;
    void set_missing(Feature f, uint8_t m);
};

struct IllnessEpisode {
    int onset_day = 0;
    int duration = 0;
    int confirmation_day = 0;  // in [onset_day + 1, onset_day + 3]
};

struct ParticipantSeries {
    int participant_id = 0;
    std::vector<DayRecord> days;
    std::vector<IllnessEpisode> episodes;
};

struct FeatureParams {
    double base_mean = 0.0;
    double base_std = 0.0;
    double season_amp = 0.0;
    double noise_std = 0.0;
};

struct CohortParams {
    int n_participants = 500;
    int horizon_days = 90;
    FeatureParams rhr{62.0, 7.0, 1.0, 2.5};
    FeatureParams tib{440.0, 50.0, 15.0, 30.0};
    FeatureParams cal{550.0, 120.0, 40.0, 80.0};
    double illness_rhr_delta = 6.0;    // peak bpm increase
    double illness_tib_delta = 70.0;   // peak minutes increase
    double illness_cal_factor = 0.72;  // multiplier at the episode peak
    double illness_prevalence = 0.15;  // episode probability per 30-day span
    int episode_duration = 7;
    double base_missing_rate = 0.08;
    double illness_missing_boost = 0.12;
    uint64_t seed = 42;

    void validate() const;
};

std::vector<ParticipantSeries> generate_cohort(const CohortParams& params);

// z-score statistics per feature; computed on the pretraining population and
// reused everywhere else so adaptation/test never leak into them.
struct FeatureStats {
    std::array<double, kNumFeatures> mean{};
    std::array<double, kNumFeatures> stddev{};
};

FeatureStats compute_feature_stats(std::span<const ParticipantSeries> cohort);

std::pair<std::vector<ParticipantSeries>, FeatureStats> standardize(
    std::span<const ParticipantSeries> cohort, std::optional<FeatureStats> stats = std::nullopt);

struct WindowSample {
    std::array<float, kWindowDays * kNumChannels> inputs{};  // row-major day x channel
    float target = 0.0f;  // next-day feature value (z-units) for pretraining windows
    int label = 0;        // illness label for classification windows
    int participant_id = 0;
    int window_end_day = 0;  // last day inside the window; the target day is +1
};

// Sliding windows (stride 1) over standardized series whose next-day target
// feature is observed; windows with missing inputs are kept (flags carry the
// information).
std::vector<WindowSample> make_ssl_windows(std::span<const ParticipantSeries> series,
                                           Feature target_feature);

// Classification windows labeled by the day after the window. Negatives are
// subsampled to `neg_ratio` negatives per positive (0 keeps all; also keeps
// all when there is no positive).
std::vector<WindowSample> make_ili_windows(std::span<const ParticipantSeries> series, int neg_ratio,
                                           Rng& rng);

struct CohortSplit {
    std::vector<int> ssl_train;
    std::vector<int> adaptation_order;  // nested: size n uses the first n ids
    std::vector<int> test;
    std::vector<int> adaptation_sizes;

    std::vector<int> adaptation(int n) const;
};

CohortSplit split_cohort(std::span<const ParticipantSeries> cohort, Rng& rng,
                         std::vector<int> adaptation_sizes = {25, 50, 100, 200, 400},
                         int test_participants = 64, int min_ssl = 1);

std::vector<ParticipantSeries> select_participants(std::span<const ParticipantSeries> cohort,
                                                   std::span<const int> ids);

}  // namespace sslchrono
