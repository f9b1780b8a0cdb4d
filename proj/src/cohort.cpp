#include "sslchrono/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "sslchrono/errors.hpp"

namespace sslchrono {

const char* feature_name(Feature f) {
    switch (f) {
        case Feature::kRhr: return "rhr";
        case Feature::kTib: return "tib";
        case Feature::kCal: return "cal";
    }
    return "?";
}

std::optional<Feature> feature_from_name(const std::string& name) {
    if (name == "rhr") return Feature::kRhr;
    if (name == "tib") return Feature::kTib;
    if (name == "cal") return Feature::kCal;
    return std::nullopt;
}

float DayRecord::value(Feature f) const {
    switch (f) {
        case Feature::kRhr: return rhr;
        case Feature::kTib: return tib;
        case Feature::kCal: return cal;
    }
    return 0.0f;
}

void DayRecord::set_value(Feature f, float v) {
    switch (f) {
        case Feature::kRhr: rhr = v; break;
        case Feature::kTib: tib = v; break;
        case Feature::kCal: cal = v; break;
    }
}

uint8_t DayRecord::missing(Feature f) const {
    switch (f) {
        case Feature::kRhr: return rhr_missing;
        case Feature::kTib: return tib_missing;
        case Feature::kCal: return cal_missing;
    }
    return 0;
}

void DayRecord::set_missing(Feature f, uint8_t m) {
    switch (f) {
        case Feature::kRhr: rhr_missing = m; break;
        case Feature::kTib: tib_missing = m; break;
        case Feature::kCal: cal_missing = m; break;
    }
}

void CohortParams::validate() const {
    if (n_participants < 1) config_error("n_participants must be >= 1");
    if (horizon_days < kWindowDays + 2)
        config_error("horizon_days must be >= " + std::to_string(kWindowDays + 2) +
                     " (window + target + slack), got " + std::to_string(horizon_days));
    auto prob = [](double p, const char* name) {
        if (p < 0.0 || p > 1.0) config_error(std::string(name) + " must lie in [0, 1]");
    };
    prob(illness_prevalence, "illness_prevalence");
    prob(base_missing_rate, "base_missing_rate");
    prob(illness_missing_boost, "illness_missing_boost");
    prob(base_missing_rate + illness_missing_boost, "base_missing_rate + illness_missing_boost");
    if (episode_duration < 1) config_error("episode_duration must be >= 1");
}

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Triangular severity profile over the episode, peaking mid-way.
double episode_weight(int day, const IllnessEpisode& ep) {
    const int k = day - ep.onset_day;
    if (k < 0 || k >= ep.duration) return 0.0;
    const double peak = (ep.duration - 1) / 2.0;
    const double half = peak + 1.0;
    return 1.0 - std::abs(k - peak) / half;
}

struct ParticipantProfile {
    std::array<double, kNumFeatures> baseline;
    std::array<double, kNumFeatures> phase;
};

ParticipantSeries generate_participant(const CohortParams& p, int participant_id, Rng rng) {
    ParticipantSeries series;
    series.participant_id = participant_id;
    series.days.resize(static_cast<size_t>(p.horizon_days));

    const std::array<FeatureParams, kNumFeatures> fp = {p.rhr, p.tib, p.cal};
    ParticipantProfile prof;
    for (int f = 0; f < kNumFeatures; ++f) {
        prof.baseline[static_cast<size_t>(f)] = rng.normal(fp[static_cast<size_t>(f)].base_mean,
                                                           fp[static_cast<size_t>(f)].base_std);
        prof.phase[static_cast<size_t>(f)] = rng.uniform(0.0, 7.0);
    }

    // One episode opportunity per 30-day span; onsets placed so the episode
    // and its confirmation fit inside the horizon and do not overlap.
    const int spans = std::max(1, p.horizon_days / 30);
    int last_end = -4;
    for (int s = 0; s < spans; ++s) {
        const bool has = rng.bernoulli(p.illness_prevalence);
        if (!has) continue;
        const int span_lo = s * p.horizon_days / spans;
        const int span_hi = (s + 1) * p.horizon_days / spans;
        const int lo = std::max({span_lo, 1, last_end + 3});
        const int hi = std::min(span_hi, p.horizon_days - p.episode_duration);
        if (lo >= hi) continue;
        IllnessEpisode ep;
        ep.onset_day = rng.range_int(lo, hi);
        ep.duration = p.episode_duration;
        ep.confirmation_day = ep.onset_day + rng.range_int(1, 4);
        if (ep.confirmation_day >= p.horizon_days) continue;
        series.episodes.push_back(ep);
        last_end = ep.onset_day + ep.duration;
    }

    for (int d = 0; d < p.horizon_days; ++d) {
        DayRecord& rec = series.days[static_cast<size_t>(d)];
        double w = 0.0;
        for (const auto& ep : series.episodes) w = std::max(w, episode_weight(d, ep));
        for (int f = 0; f < kNumFeatures; ++f) {
            const FeatureParams& fpar = fp[static_cast<size_t>(f)];
            double v = prof.baseline[static_cast<size_t>(f)] +
                       fpar.season_amp *
                           std::sin(kTwoPi * (d + prof.phase[static_cast<size_t>(f)]) / 7.0) +
                       rng.normal(0.0, fpar.noise_std);
            const Feature feat = static_cast<Feature>(f);
            if (feat == Feature::kRhr) v += p.illness_rhr_delta * w;
            if (feat == Feature::kTib) v += p.illness_tib_delta * w;
            if (feat == Feature::kCal) v *= 1.0 - (1.0 - p.illness_cal_factor) * w;
            if (feat == Feature::kRhr) v = std::clamp(v, 30.0, 220.0);
            if (feat == Feature::kTib) v = std::clamp(v, 0.0, 1440.0);
            if (feat == Feature::kCal) v = std::max(v, 0.0);
            rec.set_value(feat, static_cast<float>(v));
        }
        for (int f = 0; f < kNumFeatures; ++f) {
            const double rate = p.base_missing_rate + (w > 0.0 ? p.illness_missing_boost : 0.0);
            rec.set_missing(static_cast<Feature>(f), rng.bernoulli(rate) ? 1 : 0);
        }
    }
    for (const auto& ep : series.episodes)
        series.days[static_cast<size_t>(ep.confirmation_day)].ili_positive = 1;

    // Missing values are replaced by the participant's observed mean for the
    // feature; the flag preserves the missingness losslessly.
    for (int f = 0; f < kNumFeatures; ++f) {
        const Feature feat = static_cast<Feature>(f);
        double sum = 0.0;
        int n = 0;
        for (const auto& rec : series.days)
            if (!rec.missing(feat)) {
                sum += rec.value(feat);
                ++n;
            }
        const float fill = n > 0 ? static_cast<float>(sum / n)
                                 : static_cast<float>(fp[static_cast<size_t>(f)].base_mean);
        for (auto& rec : series.days)
            if (rec.missing(feat)) rec.set_value(feat, fill);
    }
    return series;
}

}  // namespace

std::vector<ParticipantSeries> generate_cohort(const CohortParams& params) {
    params.validate();
    Rng master(params.seed);
    std::vector<ParticipantSeries> cohort;
    cohort.reserve(static_cast<size_t>(params.n_participants));
    for (int i = 0; i < params.n_participants; ++i)
        cohort.push_back(generate_participant(params, i, master.stream(static_cast<uint64_t>(i))));
    return cohort;
}

FeatureStats compute_feature_stats(std::span<const ParticipantSeries> cohort) {
    FeatureStats stats;
    for (int f = 0; f < kNumFeatures; ++f) {
        double sum = 0.0;
        int64_t n = 0;
        for (const auto& s : cohort)
            for (const auto& rec : s.days) {
                sum += rec.value(static_cast<Feature>(f));
                ++n;
            }
        if (n == 0) data_error("cannot compute feature statistics on an empty cohort");
        const double mean = sum / static_cast<double>(n);
        double sq = 0.0;
        for (const auto& s : cohort)
            for (const auto& rec : s.days) {
                const double d = rec.value(static_cast<Feature>(f)) - mean;
                sq += d * d;
            }
        const double stddev = std::sqrt(sq / static_cast<double>(n));
        if (stddev <= 0.0)
            data_error(std::string("feature '") + feature_name(static_cast<Feature>(f)) +
                       "' has zero standard deviation; cannot standardize");
        stats.mean[static_cast<size_t>(f)] = mean;
        stats.stddev[static_cast<size_t>(f)] = stddev;
    }
    return stats;
}

std::pair<std::vector<ParticipantSeries>, FeatureStats> standardize(
    std::span<const ParticipantSeries> cohort, std::optional<FeatureStats> stats) {
    const FeatureStats st = stats ? *stats : compute_feature_stats(cohort);
    std::vector<ParticipantSeries> out(cohort.begin(), cohort.end());
    for (auto& s : out)
        for (auto& rec : s.days)
            for (int f = 0; f < kNumFeatures; ++f) {
                const Feature feat = static_cast<Feature>(f);
                const double z = (rec.value(feat) - st.mean[static_cast<size_t>(f)]) /
                                 st.stddev[static_cast<size_t>(f)];
                rec.set_value(feat, static_cast<float>(z));
            }
    return {std::move(out), st};
}

namespace {

void fill_window_inputs(const ParticipantSeries& s, int start, WindowSample& w) {
    for (int d = 0; d < kWindowDays; ++d) {
        const DayRecord& rec = s.days[static_cast<size_t>(start + d)];
        float* rowv = w.inputs.data() + d * kNumChannels;
        rowv[0] = rec.rhr;
        rowv[1] = rec.tib;
        rowv[2] = rec.cal;
        rowv[3] = static_cast<float>(rec.rhr_missing);
        rowv[4] = static_cast<float>(rec.tib_missing);
        rowv[5] = static_cast<float>(rec.cal_missing);
    }
}

}  // namespace

std::vector<WindowSample> make_ssl_windows(std::span<const ParticipantSeries> series,
                                           Feature target_feature) {
    std::vector<WindowSample> out;
    for (const auto& s : series) {
        const int horizon = static_cast<int>(s.days.size());
        for (int start = 0; start + kWindowDays < horizon; ++start) {
            const int target_day = start + kWindowDays;
            const DayRecord& t = s.days[static_cast<size_t>(target_day)];
            if (t.missing(target_feature)) continue;  // next-day value must be known
            WindowSample w;
            fill_window_inputs(s, start, w);
            w.target = t.value(target_feature);
            w.label = 0;
            w.participant_id = s.participant_id;
            w.window_end_day = start + kWindowDays - 1;
            out.push_back(w);
        }
    }
    return out;
}

std::vector<WindowSample> make_ili_windows(std::span<const ParticipantSeries> series, int neg_ratio,
                                           Rng& rng) {
    if (neg_ratio < 0) value_error("neg_ratio must be >= 0");
    std::vector<WindowSample> all;
    int64_t n_pos = 0;
    for (const auto& s : series) {
        const int horizon = static_cast<int>(s.days.size());
        for (int start = 0; start + kWindowDays < horizon; ++start) {
            const int label_day = start + kWindowDays;
            WindowSample w;
            fill_window_inputs(s, start, w);
            w.label = s.days[static_cast<size_t>(label_day)].ili_positive ? 1 : 0;
            w.target = static_cast<float>(w.label);
            w.participant_id = s.participant_id;
            w.window_end_day = start + kWindowDays - 1;
            n_pos += w.label;
            all.push_back(w);
        }
    }
    if (neg_ratio == 0 || n_pos == 0) return all;

    const int64_t n_neg = static_cast<int64_t>(all.size()) - n_pos;
    const int64_t keep_neg = std::min(n_neg, n_pos * neg_ratio);
    std::vector<int64_t> neg_idx;
    neg_idx.reserve(static_cast<size_t>(n_neg));
    for (int64_t i = 0; i < static_cast<int64_t>(all.size()); ++i)
        if (all[static_cast<size_t>(i)].label == 0) neg_idx.push_back(i);
    rng.shuffle(neg_idx);
    neg_idx.resize(static_cast<size_t>(keep_neg));
    std::vector<char> keep(all.size(), 0);
    for (int64_t i = 0; i < static_cast<int64_t>(all.size()); ++i)
        if (all[static_cast<size_t>(i)].label == 1) keep[static_cast<size_t>(i)] = 1;
    for (int64_t i : neg_idx) keep[static_cast<size_t>(i)] = 1;
    std::vector<WindowSample> out;
    out.reserve(static_cast<size_t>(n_pos + keep_neg));
    for (size_t i = 0; i < all.size(); ++i)
        if (keep[i]) out.push_back(all[i]);
    return out;
}

std::vector<int> CohortSplit::adaptation(int n) const {
    if (n < 1 || n > static_cast<int>(adaptation_order.size()))
        value_error("adaptation size " + std::to_string(n) + " exceeds the pool of " +
                    std::to_string(adaptation_order.size()) + " participants");
    return {adaptation_order.begin(), adaptation_order.begin() + n};
}

CohortSplit split_cohort(std::span<const ParticipantSeries> cohort, Rng& rng,
                         std::vector<int> adaptation_sizes, int test_participants, int min_ssl) {
    if (adaptation_sizes.empty()) value_error("adaptation_sizes must not be empty");
    std::sort(adaptation_sizes.begin(), adaptation_sizes.end());
    const int max_adapt = adaptation_sizes.back();
    const int needed = max_adapt + test_participants + min_ssl;
    if (static_cast<int>(cohort.size()) < needed)
        data_error("cohort of " + std::to_string(cohort.size()) + " participants is too small; " +
                   std::to_string(needed) + " required (" + std::to_string(max_adapt) +
                   " adaptation + " + std::to_string(test_participants) + " test + " +
                   std::to_string(min_ssl) + " pretraining)");
    std::vector<int> ids;
    ids.reserve(cohort.size());
    for (const auto& s : cohort) ids.push_back(s.participant_id);
    rng.shuffle(ids);
    CohortSplit split;
    split.adaptation_sizes = adaptation_sizes;
    split.test.assign(ids.begin(), ids.begin() + test_participants);
    split.adaptation_order.assign(ids.begin() + test_participants,
                                  ids.begin() + test_participants + max_adapt);
    split.ssl_train.assign(ids.begin() + test_participants + max_adapt, ids.end());
    return split;
}

std::vector<ParticipantSeries> select_participants(std::span<const ParticipantSeries> cohort,
                                                   std::span<const int> ids) {
    std::unordered_map<int, const ParticipantSeries*> by_id;
    for (const auto& s : cohort) by_id[s.participant_id] = &s;
    std::vector<ParticipantSeries> out;
    out.reserve(ids.size());
    for (int id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) data_error("participant id " + std::to_string(id) + " not in cohort");
        out.push_back(*it->second);
    }
    return out;
}

}  // namespace sslchrono
