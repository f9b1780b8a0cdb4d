#include "sslchrono/pipeline.hpp"

#include <filesystem>

namespace sslchrono {

void generate_study(const RunConfig& cfg) {
    CohortParams params = cfg.cohort;
    params.seed = cfg.seed;
    auto cohort = generate_cohort(params);

    Rng split_rng(derive_seed(cfg.seed, kSeedSplitStream));
    CohortSplit split =
        split_cohort(cohort, split_rng, cfg.adaptation_sizes, cfg.test_participants, /*min_ssl=*/1);

    const auto ssl_series = select_participants(cohort, split.ssl_train);
    const FeatureStats stats = compute_feature_stats(ssl_series);

    std::filesystem::create_directories(cfg.out_dir);
    write_dataset_csv(dataset_path(cfg.out_dir), cohort);
    write_stats_csv(stats_path(cfg.out_dir), stats);
    write_splits_csv(splits_path(cfg.out_dir), split);
}

StudyData build_study(const RunConfig& cfg) {
    CohortParams params = cfg.cohort;
    params.seed = cfg.seed;
    auto cohort = generate_cohort(params);
    Rng split_rng(derive_seed(cfg.seed, kSeedSplitStream));
    StudyData data;
    data.split =
        split_cohort(cohort, split_rng, cfg.adaptation_sizes, cfg.test_participants, /*min_ssl=*/1);
    data.stats = compute_feature_stats(select_participants(cohort, data.split.ssl_train));
    data.cohort_std = standardize(cohort, data.stats).first;
    return data;
}

StudyData load_study(const RunConfig& cfg) {
    if (!std::filesystem::exists(dataset_path(cfg.out_dir)))
        io_error("dataset not found at " + dataset_path(cfg.out_dir) + "; run 'generate' first");
    StudyData data;
    auto raw = load_dataset_csv(dataset_path(cfg.out_dir));
    data.stats = load_stats_csv(stats_path(cfg.out_dir));
    data.split = load_splits_csv(splits_path(cfg.out_dir));
    data.cohort_std = standardize(raw, data.stats).first;
    return data;
}

}  // namespace sslchrono
