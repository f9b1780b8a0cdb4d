#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sslchrono/checkpoint.hpp"
#include "sslchrono/pipeline.hpp"
#include "sslchrono/svg.hpp"

// sslchrono: generate a synthetic wearable cohort, pretrain next-day
// predictors, adapt a frozen-backbone classifier at several set sizes, score
// the held-out test set and chart the sweep.

namespace {

using namespace sslchrono;

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    int64_t seed = -1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value configuration file");
    cmd->add_option("--set", opts.overrides, "override a configuration key (key=value, repeatable)");
    cmd->add_option("--out", opts.out_dir, "output directory (overrides out_dir)");
    cmd->add_option("--seed", opts.seed, "master seed (overrides config and SSLCHRONO_SEED)");
}

RunConfig make_config(const CommonOpts& opts) {
    std::vector<std::string> overrides = opts.overrides;
    if (!opts.out_dir.empty()) overrides.push_back("out_dir=" + opts.out_dir);
    if (opts.seed >= 0) overrides.push_back("seed=" + std::to_string(opts.seed));
    return resolve_config(opts.config_path, overrides);
}

void write_resolved(const RunConfig& cfg, const std::string& command) {
    std::filesystem::create_directories(cfg.out_dir);
    cfg.write(cfg.out_dir + "/" + command + "_config.txt");
}

int cmd_generate(const CommonOpts& opts) {
    RunConfig cfg = make_config(opts);
    write_resolved(cfg, "generate");
    generate_study(cfg);
    std::cout << "wrote " << dataset_path(cfg.out_dir) << " (" << cfg.cohort.n_participants
              << " participants x " << cfg.cohort.horizon_days << " days)\n";
    return 0;
}

int cmd_pretrain(const CommonOpts& opts, const std::string& objective) {
    RunConfig cfg = make_config(opts);
    auto feat = feature_from_name(objective);
    if (!feat) config_error("unknown objective '" + objective + "'; expected rhr, tib or cal");
    write_resolved(cfg, "pretrain_" + objective);

    StudyData data = load_study(cfg);
    auto windows =
        make_ssl_windows(select_participants(data.cohort_std, data.split.ssl_train), *feat);

    const int obj_index = static_cast<int>(*feat);
    ModelConfig mc = cfg.model;
    mc.head_kind = HeadKind::kRegression;
    Rng init_rng(derive_seed(cfg.seed, 100 + static_cast<uint64_t>(obj_index)));
    ModelParams params = init_params(mc, init_rng);
    TrainConfig tc = cfg.pretrain_config();
    tc.seed = derive_seed(cfg.seed, 200 + static_cast<uint64_t>(obj_index));

    auto [trained, report] = pretrain(params, windows, tc);
    const std::string ckpt = cfg.out_dir + "/pretrain_" + objective + ".ckpt";
    save_checkpoint(ckpt, trained);
    write_train_report_csv(cfg.out_dir + "/pretrain_" + objective + "_report.csv", report);
    std::cout << "pretrained on " << windows.size() << " windows; final epoch loss "
              << fmt_double(report.epoch_loss.back()) << "; wrote " << ckpt << "\n";
    return 0;
}

int cmd_finetune(const CommonOpts& opts, const std::string& checkpoint, int n_adapt) {
    RunConfig cfg = make_config(opts);
    StudyData data = load_study(cfg);
    if (std::find(data.split.adaptation_sizes.begin(), data.split.adaptation_sizes.end(), n_adapt) ==
        data.split.adaptation_sizes.end())
        config_error("--n-adapt " + std::to_string(n_adapt) + " is not one of the configured sizes");

    ModelParams pretrained = load_checkpoint(checkpoint);
    Rng wrng(derive_seed(cfg.seed, 400 + static_cast<uint64_t>(n_adapt)));
    auto windows = make_ili_windows(
        select_participants(data.cohort_std, data.split.adaptation(n_adapt)), cfg.neg_ratio, wrng);

    TrainConfig tc = cfg.finetune_config();
    tc.seed = derive_seed(cfg.seed, kSeedCliFinetune + static_cast<uint64_t>(n_adapt));
    auto [adapted, report] = finetune(pretrained, windows, tc);
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

    const std::string stem = std::filesystem::path(checkpoint).stem().string();
    const std::string tag = stem + "_n" + std::to_string(n_adapt);
    write_resolved(cfg, "finetune_" + tag);
    const std::string out_ckpt = cfg.out_dir + "/" + tag + "_adapted.ckpt";
    save_checkpoint(out_ckpt, adapted);
    write_train_report_csv(cfg.out_dir + "/" + tag + "_adapted_report.csv", report);
    std::cout << "adapted on " << windows.size() << " windows from " << n_adapt
              << " participants; wrote " << out_ckpt << "\n";
    return 0;
}

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint) {
    RunConfig cfg = make_config(opts);
    StudyData data = load_study(cfg);
    ModelParams model = load_checkpoint(checkpoint);
    if (model.config.head_kind != HeadKind::kClassification)
        config_error("checkpoint has a regression head; evaluate needs an adapted (classification) "
                     "checkpoint");
    Rng wrng(derive_seed(cfg.seed, 500));
    auto windows =
        make_ili_windows(select_participants(data.cohort_std, data.split.test), cfg.neg_ratio, wrng);
    ScoredSet scored = score_test_set(model, windows);

    write_resolved(cfg, "evaluate");
    std::vector<int> end_days;
    end_days.reserve(windows.size());
    for (const auto& w : windows) end_days.push_back(w.window_end_day);
    write_scores_csv(cfg.out_dir + "/scores.csv", scored, end_days);
    const double a = auc(scored);
    std::cout << "auc " << fmt_double(a) << " (" << scored.scores.size() << " test windows)\n";
    return 0;
}

int cmd_sweep(const CommonOpts& opts, bool baseline_flag) {
    RunConfig cfg = make_config(opts);
    if (baseline_flag) cfg.sweep_baseline = true;
    write_resolved(cfg, "sweep");
    StudyData data = load_study(cfg);

    SweepResult result = run_sweep(data.cohort_std, data.split, cfg.sweep_setup());
    write_sweep_csv(cfg.out_dir + "/sweep.csv", result);
    write_sweep_chart(cfg.out_dir + "/sweep.svg", result);

    bool any_failed = false;
    for (const auto& c : result.cells) {
        if (c.ok) {
            std::cout << c.objective << " n=" << c.n_adaptation << " auc=" << fmt_double(c.auc_value)
                      << "\n";
        } else {
            any_failed = true;
            std::cerr << "cell " << c.objective << " n=" << c.n_adaptation << " failed: " << c.error
                      << "\n";
        }
    }
    if (any_failed) {
        std::ofstream fail(cfg.out_dir + "/sweep_failures.txt", std::ios::binary);
        for (const auto& c : result.cells)
            if (!c.ok) fail << c.objective << " " << c.n_adaptation << " " << c.error << "\n";
        std::cerr << "error: sweep: one or more cells failed (see sweep_failures.txt)\n";
        return 3;
    }
    std::cout << "wrote " << cfg.out_dir << "/sweep.csv and sweep.svg\n";
    return 0;
}

int cmd_plot(const CommonOpts& opts, std::string input, std::string output) {
    RunConfig cfg = make_config(opts);
    if (input.empty()) input = cfg.out_dir + "/sweep.csv";
    if (output.empty()) output = cfg.out_dir + "/sweep.svg";
    SweepResult result = load_sweep_csv(input);
    const std::string dir = std::filesystem::path(output).parent_path().string();
    cfg.write((dir.empty() ? std::string(".") : dir) + "/plot_config.txt");
    write_sweep_chart(output, result);
    std::cout << "wrote " << output << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic wearable cohort study: next-day pretraining, frozen-backbone "
                 "adaptation and AUC sweeps"};
    app.require_subcommand(1);

    CommonOpts gen_opts;
    CLI::App* generate = app.add_subcommand("generate", "generate the dataset, splits and stats");
    add_common(generate, gen_opts);

    CommonOpts pre_opts;
    std::string objective = "rhr";
    CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "pretrain a next-day predictor");
    add_common(pretrain_cmd, pre_opts);
    pretrain_cmd->add_option("--objective", objective, "rhr | tib | cal")->required();

    CommonOpts fit_opts;
    std::string fit_checkpoint;
    int n_adapt = 0;
    CLI::App* finetune_cmd =
        app.add_subcommand("finetune", "adapt a fresh classification head on a frozen backbone");
    add_common(finetune_cmd, fit_opts);
    finetune_cmd->add_option("--checkpoint", fit_checkpoint, "pretrained checkpoint")->required();
    finetune_cmd->add_option("--n-adapt", n_adapt, "adaptation set size")->required();

    CommonOpts eval_opts;
    std::string eval_checkpoint;
    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score the held-out test set");
    add_common(evaluate_cmd, eval_opts);
    evaluate_cmd->add_option("--checkpoint", eval_checkpoint, "adapted checkpoint")->required();

    CommonOpts sweep_opts;
    bool baseline_flag = false;
    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "full objective x adaptation-size grid with chart");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_flag("--baseline", baseline_flag, "also run the random-backbone baseline");

    CommonOpts plot_opts;
    std::string plot_in, plot_out;
    CLI::App* plot_cmd = app.add_subcommand("plot", "render a sweep CSV as an SVG chart");
    add_common(plot_cmd, plot_opts);
    plot_cmd->add_option("--input", plot_in, "sweep CSV (default <out_dir>/sweep.csv)");
    plot_cmd->add_option("--output", plot_out, "output SVG path (default <out_dir>/sweep.svg)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(gen_opts);
        if (pretrain_cmd->parsed()) return cmd_pretrain(pre_opts, objective);
        if (finetune_cmd->parsed()) return cmd_finetune(fit_opts, fit_checkpoint, n_adapt);
        if (evaluate_cmd->parsed()) return cmd_evaluate(eval_opts, eval_checkpoint);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_opts, baseline_flag);
        if (plot_cmd->parsed()) return cmd_plot(plot_opts, plot_in, plot_out);
    } catch (const sslchrono::Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
