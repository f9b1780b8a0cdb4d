#include "sslchrono/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace sslchrono {

double auc(const ScoredSet& set) {
    const size_t n = set.scores.size();
    if (set.labels.size() != n)
        shape_error("auc: " + std::to_string(n) + " scores but " + std::to_string(set.labels.size()) +
                    " labels");
    int64_t n_pos = 0, n_neg = 0;
    for (int y : set.labels) {
        if (y != 0 && y != 1) value_error("auc: labels must be 0 or 1, got " + std::to_string(y));
        y ? ++n_pos : ++n_neg;
    }
    if (n_pos == 0 || n_neg == 0)
        data_error("auc undefined: labels contain a single class (" + std::to_string(n_pos) +
                   " positives, " + std::to_string(n_neg) + " negatives)");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return set.scores[a] < set.scores[b]; });

    // Twice the Mann-Whitney numerator stays integral, so the sort-based value
    // matches pairwise counting exactly.
    int64_t numerator2 = 0;
    int64_t neg_below = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        int64_t pos_in_group = 0, neg_in_group = 0;
        while (j < n && set.scores[order[j]] == set.scores[order[i]]) {
            set.labels[order[j]] ? ++pos_in_group : ++neg_in_group;
            ++j;
        }
        numerator2 += pos_in_group * (2 * neg_below + neg_in_group);
        neg_below += neg_in_group;
        i = j;
    }
    return static_cast<double>(numerator2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace {

float positive_probability(std::span<const float> rep, const HeadParams& head) {
    Tape tape;
    tape.set_recording(false);
    Tensor r = Tensor::from({1, static_cast<int64_t>(rep.size())},
                            std::vector<float>(rep.begin(), rep.end()));
    Tensor logits = apply_head(tape, r, head);
    Tensor probs = softmax(tape, logits, -1);
    return probs.at(0, 1);
}

int64_t window_key(const WindowSample& w) {
    return (static_cast<int64_t>(w.participant_id) << 20) | static_cast<int64_t>(w.window_end_day);
}

using RepCache = std::unordered_map<int64_t, std::vector<float>>;

const std::vector<float>& cached_representation(RepCache& cache, const ModelParams& params,
                                                const WindowSample& w) {
    auto [it, inserted] = cache.try_emplace(window_key(w));
    if (inserted) it->second = window_representation(params, w);
    return it->second;
}

}  // namespace

ScoredSet score_test_set(const ModelParams& model, const std::vector<WindowSample>& windows) {
    if (model.config.head_kind != HeadKind::kClassification)
        config_error("score_test_set requires a classification head");
    ScoredSet out;
    out.scores.reserve(windows.size());
    out.labels.reserve(windows.size());
    out.participant_ids.reserve(windows.size());
    for (const auto& w : windows) {
        const std::vector<float> rep = window_representation(model, w);
        out.scores.push_back(positive_probability(rep, model.head));
        out.labels.push_back(w.label);
        out.participant_ids.push_back(w.participant_id);
    }
    return out;
}

const SweepCell* SweepResult::find(const std::string& objective, int n) const {
    for (const auto& c : cells)
        if (c.objective == objective && c.n_adaptation == n) return &c;
    return nullptr;
}

const ObjectiveRun* SweepResult::find_run(const std::string& objective) const {
    for (const auto& r : pretrain_runs)
        if (r.objective == objective) return &r;
    return nullptr;
}

bool SweepResult::all_ok() const {
    for (const auto& c : cells)
        if (!c.ok) return false;
    return true;
}

std::optional<double> reference_auc(const std::string& objective, int n_adaptation) {
    static const std::map<std::string, std::map<int, double>> kReference = {
        {"rhr", {{25, 0.55}, {50, 0.67}, {100, 0.74}, {200, 0.77}, {400, 0.78}}},
        {"tib", {{25, 0.49}, {50, 0.60}, {100, 0.74}, {200, 0.79}, {400, 0.79}}},
        {"cal", {{25, 0.49}, {50, 0.55}, {100, 0.55}, {200, 0.62}, {400, 0.65}}},
    };
    auto it = kReference.find(objective);
    if (it == kReference.end()) return std::nullopt;
    auto jt = it->second.find(n_adaptation);
    if (jt == it->second.end()) return std::nullopt;
    return jt->second;
}

namespace {

// Seed stream ids for the sweep; every cell derives its randomness from the
// master seed through these, so serial and threaded execution agree bitwise.
enum SeedStream : uint64_t {
    kSeedInit = 100,          // + objective index
    kSeedPretrain = 200,      // + objective index
    kSeedFinetune = 300,      // + objective index * 16 + size index
    kSeedAdaptWindows = 400,  // + adaptation size
    kSeedTestWindows = 500,
    kSeedBaselineInit = 600,
};

struct ColumnInputs {
    std::span<const ParticipantSeries> cohort;
    const CohortSplit* split;
    const SweepSetup* setup;
    std::string tag;
    int seed_index;       // 0..2 objectives, 3 baseline
    bool with_reference;
};

std::vector<SweepCell> run_column(const ColumnInputs& in, const ModelParams& backbone) {
    const SweepSetup& setup = *in.setup;
    std::vector<SweepCell> cells;
    RepCache cache;

    std::vector<WindowSample> test_windows;
    {
        Rng rng(derive_seed(setup.master_seed, kSeedTestWindows));
        test_windows =
            make_ili_windows(select_participants(in.cohort, in.split->test), setup.neg_ratio, rng);
    }

    for (size_t si = 0; si < setup.adaptation_sizes.size(); ++si) {
        const int n = setup.adaptation_sizes[si];
        SweepCell cell;
        cell.objective = in.tag;
        cell.n_adaptation = n;
        cell.seed = derive_seed(setup.master_seed,
                                kSeedFinetune + static_cast<uint64_t>(in.seed_index) * 16 + si);
        cell.paper_reference = in.with_reference ? reference_auc(in.tag, n) : std::nullopt;
        try {
            Rng wrng(derive_seed(setup.master_seed, kSeedAdaptWindows + static_cast<uint64_t>(n)));
            auto adapt_windows = make_ili_windows(
                select_participants(in.cohort, in.split->adaptation(n)), setup.neg_ratio, wrng);
            if (adapt_windows.empty()) data_error("adaptation set produced no windows");

            std::vector<std::vector<float>> reps;
            reps.reserve(adapt_windows.size());
            std::vector<int> labels;
            labels.reserve(adapt_windows.size());
            for (const auto& w : adapt_windows) {
                reps.push_back(cached_representation(cache, backbone, w));
                labels.push_back(w.label);
            }
            TrainConfig fit_cfg = setup.finetune_cfg;
            fit_cfg.seed = cell.seed;
            Rng head_rng = Rng(fit_cfg.seed).stream(4);
            auto [head, report] =
                train_classifier_head(reps, labels, fit_cfg, head_rng, backbone.config.d_model);

            ScoredSet scored;
            scored.scores.reserve(test_windows.size());
            for (const auto& w : test_windows) {
                scored.scores.push_back(positive_probability(cached_representation(cache, backbone, w), head));
                scored.labels.push_back(w.label);
                scored.participant_ids.push_back(w.participant_id);
            }
            cell.auc_value = auc(scored);
            cell.ok = true;
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
            cell.auc_value = std::numeric_limits<double>::quiet_NaN();
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

void check_disjoint(const CohortSplit& split) {
    std::unordered_set<int> test(split.test.begin(), split.test.end());
    std::unordered_set<int> ssl(split.ssl_train.begin(), split.ssl_train.end());
    for (int id : split.adaptation_order) {
        if (test.count(id))
            data_error("participant " + std::to_string(id) + " appears in both test and adaptation");
        if (ssl.count(id))
            data_error("participant " + std::to_string(id) +
                       " appears in both pretraining and adaptation");
    }
    for (int id : split.ssl_train)
        if (test.count(id))
            data_error("participant " + std::to_string(id) + " appears in both test and pretraining");
}

}  // namespace

std::vector<SweepCell> baseline_random_backbone(std::span<const ParticipantSeries> cohort_std,
                                                const CohortSplit& split, const SweepSetup& setup) {
    ModelConfig cfg = setup.model;
    cfg.head_kind = HeadKind::kRegression;
    Rng rng(derive_seed(setup.master_seed, kSeedBaselineInit));
    ModelParams random_backbone = init_params(cfg, rng);
    ColumnInputs in{cohort_std, &split, &setup, "random_init", 3, false};
    return run_column(in, random_backbone);
}

SweepResult run_sweep(std::span<const ParticipantSeries> cohort_std, const CohortSplit& split,
                      const SweepSetup& setup) {
    setup.model.validate();
    check_disjoint(split);

    static const std::pair<const char*, Feature> kObjectives[] = {
        {"rhr", Feature::kRhr}, {"tib", Feature::kTib}, {"cal", Feature::kCal}};

    struct Job {
        std::string tag;
        Feature feature = Feature::kRhr;
        bool baseline = false;
        int seed_index = 0;
    };
    std::vector<Job> jobs;
    for (int i = 0; i < 3; ++i)
        jobs.push_back({kObjectives[i].first, kObjectives[i].second, false, i});
    if (setup.include_baseline) jobs.push_back({"random_init", Feature::kRhr, true, 3});

    const auto ssl_series = select_participants(cohort_std, split.ssl_train);

    std::vector<std::vector<SweepCell>> results(jobs.size());
    std::vector<TrainReport> reports(jobs.size());
    auto run_job = [&](size_t ji) {
        const Job& job = jobs[ji];
        try {
            if (job.baseline) {
                results[ji] = baseline_random_backbone(cohort_std, split, setup);
                return;
            }
            ModelConfig cfg = setup.model;
            cfg.head_kind = HeadKind::kRegression;
            Rng init_rng(derive_seed(setup.master_seed, kSeedInit + static_cast<uint64_t>(job.seed_index)));
            ModelParams params = init_params(cfg, init_rng);
            TrainConfig pre_cfg = setup.pretrain_cfg;
            pre_cfg.seed = derive_seed(setup.master_seed, kSeedPretrain + static_cast<uint64_t>(job.seed_index));
            auto windows = make_ssl_windows(ssl_series, job.feature);
            auto [trained, report] = pretrain(params, windows, pre_cfg);
            reports[ji] = std::move(report);
            ColumnInputs in{cohort_std, &split, &setup, job.tag, job.seed_index, true};
            results[ji] = run_column(in, trained);
        } catch (const std::exception& e) {
            // Pretraining failed: every cell of the column reports the reason.
            results[ji].clear();
            for (size_t si = 0; si < setup.adaptation_sizes.size(); ++si) {
                SweepCell cell;
                cell.objective = job.tag;
                cell.n_adaptation = setup.adaptation_sizes[si];
                cell.seed = derive_seed(setup.master_seed,
                                        kSeedFinetune + static_cast<uint64_t>(job.seed_index) * 16 + si);
                cell.paper_reference = job.baseline ? std::nullopt : reference_auc(job.tag, cell.n_adaptation);
                cell.ok = false;
                cell.error = e.what();
                cell.auc_value = std::numeric_limits<double>::quiet_NaN();
                results[ji].push_back(std::move(cell));
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(setup.threads, static_cast<int>(jobs.size())));
    if (n_threads <= 1) {
        for (size_t ji = 0; ji < jobs.size(); ++ji) run_job(ji);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&]() {
                for (;;) {
                    const size_t ji = next.fetch_add(1);
                    if (ji >= jobs.size()) return;
                    run_job(ji);
                }
            });
        for (auto& th : pool) th.join();
    }

    SweepResult out;
    for (size_t ji = 0; ji < jobs.size(); ++ji) {
        for (auto& cell : results[ji]) out.cells.push_back(std::move(cell));
        if (!jobs[ji].baseline && !reports[ji].epoch_loss.empty())
            out.pretrain_runs.push_back({jobs[ji].tag, std::move(reports[ji])});
    }
    return out;
}

}  // namespace sslchrono
