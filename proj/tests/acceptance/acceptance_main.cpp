// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion. Criteria 5-8 and 10 share
// three desk-scale study sweeps (master seeds 1, 2, 3) computed up front.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "auc_oracle.hpp"
#include "reference_model.hpp"
#include "sslchrono/checkpoint.hpp"
#include "sslchrono/pipeline.hpp"
#include "test_support.hpp"

using namespace sslchrono;

namespace {

struct CriterionResult {
    int id;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt(double v, const char* spec = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

// ---------------------------------------------------------------------------
// criterion 1: gradient correctness on the toy model
// ---------------------------------------------------------------------------

CriterionResult criterion_gradients() {
    CriterionResult r{1, "gradient correctness (toy model, h=1e-3, 100 params)"};
    const double t0 = now_seconds();

    ModelConfig cfg;
    cfg.n_blocks = 2;
    cfg.d_model = 8;
    cfg.seq_len = 10;
    cfg.n_channels = 6;
    cfg.dropout_p = 0.0;

    const int batch = 4;
    ModelParams params;
    std::vector<Tensor> window_tensors;
    std::vector<std::vector<double>> windows64;
    for (uint64_t seed = 11;; ++seed) {
        params = refmodel::gradcheck_params(cfg, seed);
        window_tensors.clear();
        windows64.clear();
        Rng rng(seed + 7);
        for (int i = 0; i < batch; ++i) {
            std::vector<float> data(60);
            for (auto& v : data) v = static_cast<float>(rng.normal());
            Tensor w = Tensor::from({10, 6}, std::move(data));
            window_tensors.push_back(w);
            auto wd = w.data();
            windows64.emplace_back(wd.begin(), wd.end());
        }
        if (refmodel::min_relu_margin(refmodel::from_params(params), windows64) > 2e-2) break;
    }

    const double h = 1e-3;
    double max_err = 0.0;
    auto check_loss = [&](bool classification) {
        ModelParams model = params;
        std::vector<int> labels = {0, 1, 1, 0};
        std::vector<float> targets = {0.3f, -0.7f, 1.1f, 0.05f};
        if (classification) {
            Rng hr(99);
            model = swap_head(params, HeadKind::kClassification, hr);
        }
        Tape tape;
        Rng unused(0);
        std::vector<Tensor> outs;
        for (int i = 0; i < batch; ++i)
            outs.push_back(forward(tape, window_tensors[static_cast<size_t>(i)], model, Mode::kEval, unused));
        Tensor loss = classification
                          ? cross_entropy_loss(tape, stack_rows(tape, outs), labels)
                          : mse_loss(tape, stack_rows(tape, outs),
                                     Tensor::from({batch, 1}, std::vector<float>(targets)));
        tape.backward(loss);

        refmodel::RefParams rp = refmodel::from_params(model);
        const std::vector<double> targets64(targets.begin(), targets.end());
        // flatten all (parameter, index) slots and sample 100 of them
        std::vector<std::pair<std::string, size_t>> slots;
        for (const auto& np : model.named())
            for (int64_t i = 0; i < np.tensor.size(); ++i)
                slots.emplace_back(np.name, static_cast<size_t>(i));
        Rng pick(classification ? 555u : 556u);
        pick.shuffle(slots);
        slots.resize(100);

        for (const auto& [name, idx] : slots) {
            float analytic = 0.0f;
            for (const auto& np : model.named())
                if (np.name == name) analytic = np.tensor.grad()[idx];
            auto& slot = rp.values[name][idx];
            const double keep = slot;
            slot = keep + h;
            const double up = classification ? refmodel::ce_loss_batch(rp, windows64, labels)
                                             : refmodel::mse_loss_batch(rp, windows64, targets64);
            slot = keep - h;
            const double down = classification ? refmodel::ce_loss_batch(rp, windows64, labels)
                                               : refmodel::mse_loss_batch(rp, windows64, targets64);
            slot = keep;
            max_err = std::max(max_err, testsup::rel_err(analytic, (up - down) / (2.0 * h)));
        }
    };
    check_loss(false);
    check_loss(true);

    r.seconds = now_seconds() - t0;
    r.pass = max_err < 1e-4 && r.seconds < 30.0;
    r.detail = "max rel err " + fmt(max_err);
    return r;
}

// ---------------------------------------------------------------------------
// criterion 2: fast AUC equals the pairwise oracle exactly
// ---------------------------------------------------------------------------

CriterionResult criterion_auc_oracle() {
    CriterionResult r{2, "AUC oracle equivalence (1000 instances, exact)"};
    const double t0 = now_seconds();
    Rng rng(2025);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(49));
        ScoredSet s;
        s.scores.resize(static_cast<size_t>(n));
        s.labels.resize(static_cast<size_t>(n));
        for (auto& v : s.scores) v = static_cast<float>(rng.below(8)) / 7.0f;
        for (auto& y : s.labels) y = static_cast<int>(rng.below(2));
        s.labels[0] = 0;
        s.labels[static_cast<size_t>(n - 1)] = 1;
        s.participant_ids.assign(static_cast<size_t>(n), 0);
        if (auc(s) != testsup_auc::pairwise_auc(s.scores, s.labels)) ++mismatches;
    }
    r.seconds = now_seconds() - t0;
    r.pass = mismatches == 0 && r.seconds < 10.0;
    r.detail = std::to_string(mismatches) + " mismatches";
    return r;
}

// ---------------------------------------------------------------------------
// criterion 3: architecture invariants on 100 random configurations
// ---------------------------------------------------------------------------

CriterionResult criterion_invariants() {
    CriterionResult r{3, "architecture invariants (100 random configurations)"};
    const double t0 = now_seconds();
    Rng rng(31337);
    double worst_softmax = 0.0, worst_ln_mean = 0.0, worst_ln_var = 0.0, worst_causal = 0.0,
           worst_probs = 0.0;
    const int d_choices[] = {8, 12, 16, 24, 32};
    for (int trial = 0; trial < 100; ++trial) {
        ModelConfig cfg;
        cfg.d_model = d_choices[rng.below(5)];
        cfg.n_heads = rng.below(2) ? 1 : (cfg.d_model % 4 == 0 ? 4 : 2);
        cfg.n_blocks = 1 + static_cast<int>(rng.below(4));
        cfg.seq_len = 2 + static_cast<int>(rng.below(11));
        cfg.n_channels = 2 + static_cast<int>(rng.below(7));
        cfg.dropout_p = 0.0;
        Rng init_rng(rng.next_u64());
        ModelParams params = init_params(cfg, init_rng);

        Tape tape;
        tape.set_recording(false);
        Rng unused(0);

        // softmax rows sum to one
        {
            std::vector<float> x(35);
            for (auto& v : x) v = static_cast<float>(rng.normal(0.0, 4.0));
            Tensor s = softmax(tape, Tensor::from({5, 7}, std::move(x)), -1);
            for (int64_t i = 0; i < 5; ++i) {
                double sum = 0.0;
                for (int64_t j = 0; j < 7; ++j) sum += s.at(i, j);
                worst_softmax = std::max(worst_softmax, std::abs(sum - 1.0));
            }
        }
        // layer_norm mean/variance with unit gain, zero shift
        {
            const int64_t n = cfg.d_model;
            std::vector<float> x(static_cast<size_t>(n));
            for (auto& v : x) v = static_cast<float>(rng.normal(1.0, 3.0));
            Tensor out = layer_norm(tape, Tensor::from({n}, std::move(x)),
                                    Tensor::filled({n}, 1.0f), Tensor::filled({n}, 0.0f));
            double mean = 0.0, var = 0.0;
            for (int64_t i = 0; i < n; ++i) mean += out.at(i);
            mean /= static_cast<double>(n);
            for (int64_t i = 0; i < n; ++i) {
                const double d = out.at(i) - mean;
                var += d * d;
            }
            var /= static_cast<double>(n);
            worst_ln_mean = std::max(worst_ln_mean, std::abs(mean));
            worst_ln_var = std::max(worst_ln_var, std::abs(var - 1.0));
        }
        // causal mask: a change on day t cannot move outputs before t
        {
            std::vector<float> w(static_cast<size_t>(cfg.seq_len * cfg.n_channels));
            for (auto& v : w) v = static_cast<float>(rng.normal());
            Tensor w1 = Tensor::from({cfg.seq_len, cfg.n_channels}, std::vector<float>(w));
            const int64_t t = 1 + static_cast<int64_t>(rng.below(static_cast<uint64_t>(cfg.seq_len - 1)));
            Tensor w2 = w1.clone();
            for (int64_t c = 0; c < cfg.n_channels; ++c) w2.at(t, c) += 2.0f;
            Tensor x1 = embed(tape, w1, params);
            Tensor x2 = embed(tape, w2, params);
            for (const auto& block : params.blocks) {
                x1 = block_forward(tape, x1, block, cfg, Mode::kEval, unused);
                x2 = block_forward(tape, x2, block, cfg, Mode::kEval, unused);
            }
            for (int64_t i = 0; i < t; ++i)
                for (int64_t j = 0; j < cfg.d_model; ++j)
                    worst_causal = std::max(worst_causal,
                                            static_cast<double>(std::abs(x1.at(i, j) - x2.at(i, j))));
        }
        // classification probabilities form a distribution
        {
            Rng hr(rng.next_u64());
            ModelParams cls = swap_head(params, HeadKind::kClassification, hr);
            std::vector<float> w(static_cast<size_t>(cfg.seq_len * cfg.n_channels));
            for (auto& v : w) v = static_cast<float>(rng.normal());
            Tensor logits = forward(tape, Tensor::from({cfg.seq_len, cfg.n_channels}, std::move(w)),
                                    cls, Mode::kEval, unused);
            Tensor probs = softmax(tape, logits, -1);
            worst_probs = std::max(worst_probs,
                                   std::abs(static_cast<double>(probs.at(0, 0)) + probs.at(0, 1) - 1.0));
        }
    }
    r.seconds = now_seconds() - t0;
    r.pass = worst_softmax <= 1e-6 && worst_ln_mean <= 1e-5 && worst_ln_var <= 1e-3 &&
             worst_causal <= 1e-6 && worst_probs <= 1e-6 && r.seconds < 30.0;
    r.detail = "softmax " + fmt(worst_softmax) + ", ln mean " + fmt(worst_ln_mean) + ", ln var " +
               fmt(worst_ln_var) + ", causal " + fmt(worst_causal) + ", probs " + fmt(worst_probs);
    return r;
}

// ---------------------------------------------------------------------------
// criterion 4: frozen-backbone guarantee over five seeded runs
// ---------------------------------------------------------------------------

CriterionResult criterion_freeze() {
    CriterionResult r{4, "freeze guarantee (backbone bits across 5 seeded runs)"};
    const double t0 = now_seconds();
    int intact = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        CohortParams cp;
        cp.n_participants = 30;
        cp.horizon_days = 30;
        cp.illness_prevalence = 0.5;
        cp.seed = 100 + seed;
        auto [z, stats] = standardize(generate_cohort(cp));
        Rng wrng(seed);
        auto windows = make_ili_windows(z, 5, wrng);

        ModelConfig mc;
        mc.n_blocks = 2;
        mc.d_model = 32;
        Rng init_rng(seed * 17 + 1);
        ModelParams pretrained = init_params(mc, init_rng);
        const uint64_t before = backbone_checksum(pretrained);

        TrainConfig tc;
        tc.epochs = 10;
        tc.batch_size = 32;
        tc.lr0 = 3e-3;
        tc.seed = seed;
        auto [adapted, report] = finetune(pretrained, windows, tc);
        if (backbone_checksum(adapted) == before && backbone_checksum(pretrained) == before) ++intact;
    }
    r.seconds = now_seconds() - t0;
    r.pass = intact == 5;
    r.detail = std::to_string(intact) + "/5 runs kept the backbone bit-identical";
    return r;
}

// ---------------------------------------------------------------------------
// criterion 5: optimizer and schedule exactness
// ---------------------------------------------------------------------------

CriterionResult criterion_optimizer(const std::vector<SweepResult>& sweeps) {
    CriterionResult r{5, "optimizer/schedule exactness and clip cap"};
    const double t0 = now_seconds();

    bool cosine_ok = true;
    for (const auto& [total, lr0] : std::vector<std::pair<int64_t, double>>{
             {100, 1.0}, {64, 0.001}, {7, 0.37}, {2, 2.0}}) {
        cosine_ok &= std::abs(cosine_lr(0, total, lr0) - lr0) <= 1e-12;
        cosine_ok &= std::abs(cosine_lr(total, total, lr0) - 0.0) <= 1e-12;
        if (total % 2 == 0)
            cosine_ok &= std::abs(cosine_lr(total / 2, total, lr0) - lr0 / 2.0) <= 1e-12;
    }

    // first Adam step on w=0 with g=1: m_hat = v_hat = 1, so the update is
    // exactly lr / (1 + eps)
    bool adam_ok = false;
    {
        TrainConfig cfg;
        std::vector<Tensor> params = {Tensor::from({1}, {0.0f}, true)};
        params[0].accumulate_grad(std::vector<float>{1.0f});
        AdamState state = adam_init(params);
        adam_step(params, state, 0.001, cfg);
        adam_ok = std::abs(params[0].at(0) - (-0.001 / (1.0 + 1e-8))) < 1e-9;
    }

    double worst_norm = 0.0;
    size_t steps = 0;
    for (const auto& sweep : sweeps)
        for (const auto& run : sweep.pretrain_runs)
            for (double g : run.pretrain_report.grad_norm_trace) {
                worst_norm = std::max(worst_norm, g);
                ++steps;
            }
    const bool clip_ok = steps > 0 && worst_norm <= 1.0 + 1e-6;

    r.seconds = now_seconds() - t0;
    r.pass = cosine_ok && adam_ok && clip_ok;
    r.detail = std::string("cosine ") + (cosine_ok ? "exact" : "WRONG") + ", adam " +
               (adam_ok ? "exact" : "WRONG") + ", max post-clip norm " + fmt(worst_norm) + " over " +
               std::to_string(steps) + " steps";
    return r;
}

// ---------------------------------------------------------------------------
// criterion 6: pretraining learns the next-day signal at desk scale
// ---------------------------------------------------------------------------

CriterionResult criterion_ssl_signal(const RunConfig& base, const SweepResult& seed1_sweep) {
    CriterionResult r{6, "next-day learning signal vs mean predictor (3 objectives)"};
    const double t0 = now_seconds();
    RunConfig cfg = base;
    cfg.seed = 1;
    StudyData study = build_study(cfg);
    auto ssl = select_participants(study.cohort_std, study.split.ssl_train);

    std::ostringstream detail;
    bool ok = true;
    for (const auto& [name, feat] : std::vector<std::pair<std::string, Feature>>{
             {"rhr", Feature::kRhr}, {"tib", Feature::kTib}, {"cal", Feature::kCal}}) {
        const ObjectiveRun* run = seed1_sweep.find_run(name);
        if (!run || run->pretrain_report.epoch_loss.size() != 50) {
            ok = false;
            detail << name << ": missing 50-epoch report; ";
            continue;
        }
        auto windows = make_ssl_windows(ssl, feat);
        double mean = 0.0;
        for (const auto& w : windows) mean += w.target;
        mean /= static_cast<double>(windows.size());
        double base_mse = 0.0;
        for (const auto& w : windows) {
            const double d = w.target - mean;
            base_mse += d * d;
        }
        base_mse /= static_cast<double>(windows.size());

        const double final_mse = run->pretrain_report.epoch_loss.back();
        const double ratio = final_mse / base_mse;
        const double secs = run->pretrain_report.wall_time_seconds;
        detail << name << " ratio " << fmt(ratio, "%.3f") << " (" << fmt(secs, "%.0f") << "s) ";
        ok &= ratio <= 0.7 && secs < 600.0;
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.detail = detail.str();
    return r;
}

// ---------------------------------------------------------------------------
// criterion 7: AUC rises with the adaptation size
// ---------------------------------------------------------------------------

CriterionResult criterion_trend(const std::vector<SweepResult>& sweeps,
                                const std::vector<int>& sizes) {
    CriterionResult r{7, "AUC trend over adaptation sizes (mean of 3 seeds)"};
    const double t0 = now_seconds();
    std::ostringstream detail;
    bool ok = true;
    for (const char* obj : {"rhr", "tib", "cal"}) {
        std::vector<double> mean_curve;
        for (int n : sizes) {
            double acc = 0.0;
            for (const auto& sweep : sweeps) {
                const SweepCell* cell = sweep.find(obj, n);
                if (!cell || !cell->ok) {
                    ok = false;
                    detail << obj << " n=" << n << " missing; ";
                    acc = std::nan("");
                    break;
                }
                acc += cell->auc_value;
            }
            mean_curve.push_back(acc / static_cast<double>(sweeps.size()));
        }
        int inversions = 0;
        double worst_depth = 0.0;
        for (size_t i = 1; i < mean_curve.size(); ++i) {
            const double delta = mean_curve[i] - mean_curve[i - 1];
            if (delta < 0.0) {
                ++inversions;
                worst_depth = std::max(worst_depth, -delta);
            }
        }
        const double gain = mean_curve.back() - mean_curve.front();
        const bool obj_ok = inversions <= 1 && worst_depth <= 0.03 && gain > 0.05;
        ok &= obj_ok;
        detail << obj << " [";
        for (size_t i = 0; i < mean_curve.size(); ++i)
            detail << (i ? " " : "") << fmt(mean_curve[i], "%.3f");
        detail << "] gain " << fmt(gain, "%.3f") << " inv " << inversions << "@" << fmt(worst_depth, "%.3f")
               << "; ";
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.detail = detail.str();
    return r;
}

// ---------------------------------------------------------------------------
// criterion 8: pretraining beats the random backbone at n=400
// ---------------------------------------------------------------------------

CriterionResult criterion_pretraining_benefit(const std::vector<SweepResult>& sweeps, int top_n) {
    CriterionResult r{8, "pretraining benefit at the largest adaptation size"};
    const double t0 = now_seconds();
    std::ostringstream detail;
    bool ok = true;
    for (size_t s = 0; s < sweeps.size(); ++s) {
        const SweepCell* base = sweeps[s].find("random_init", top_n);
        if (!base || !base->ok) {
            ok = false;
            detail << "seed" << s + 1 << ": baseline missing; ";
            continue;
        }
        int wins = 0;
        for (const char* obj : {"rhr", "tib", "cal"}) {
            const SweepCell* cell = sweeps[s].find(obj, top_n);
            if (cell && cell->ok && cell->auc_value > base->auc_value) ++wins;
        }
        detail << "seed" << s + 1 << " " << wins << "/3 above " << fmt(base->auc_value, "%.3f") << "; ";
        ok &= wins >= 2;
    }
    r.seconds = now_seconds() - t0;
    r.pass = ok;
    r.detail = detail.str();
    return r;
}

// ---------------------------------------------------------------------------
// criterion 9: end-to-end reproducibility
// ---------------------------------------------------------------------------

CriterionResult criterion_reproducibility(const std::string& binary) {
    CriterionResult r{9, "end-to-end reproducibility (sweep bytes, checkpoint bits)"};
    const double t0 = now_seconds();
    testsup::TempDir tmp("accept_repro");

    auto shell = [&tmp](const std::string& cmd) {
        const std::string full = cmd + " > " + tmp.path + "/log.txt 2>&1";
        return std::system(full.c_str()) == 0;
    };
    const std::string args = " --out " + tmp.path + " --seed 4242" +
                             " --set cohort.participants=40 --set cohort.horizon_days=24" +
                             " --set cohort.prevalence=0.5" +
                             " --set sweep.sizes=4,8 --set sweep.test_participants=6" +
                             " --set model.d_model=16 --set model.blocks=2" +
                             " --set train.pretrain_epochs=2 --set train.finetune_epochs=4" +
                             " --set train.batch_size=32";
    bool sweep_ok = false;
    if (shell(binary + " generate" + args) && shell(binary + " sweep" + args)) {
        const std::string first = read_file(tmp.path + "/sweep.csv");
        const std::string first_svg = read_file(tmp.path + "/sweep.svg");
        if (shell(binary + " sweep" + args))
            sweep_ok = read_file(tmp.path + "/sweep.csv") == first &&
                       read_file(tmp.path + "/sweep.svg") == first_svg && !first.empty();
    }

    bool ckpt_ok = false;
    {
        ModelConfig mc;  // full-size model
        Rng rng(5);
        ModelParams p = init_params(mc, rng);
        const std::string a = tmp.path + "/a.ckpt", b = tmp.path + "/b.ckpt";
        save_checkpoint(a, p);
        ModelParams q = load_checkpoint(a);
        save_checkpoint(b, q);
        ckpt_ok = read_file(a) == read_file(b) && backbone_checksum(p) == backbone_checksum(q);
    }

    r.seconds = now_seconds() - t0;
    r.pass = sweep_ok && ckpt_ok;
    r.detail = std::string("sweep bytes ") + (sweep_ok ? "identical" : "DIFFER") + ", checkpoint " +
               (ckpt_ok ? "bit-exact" : "NOT bit-exact");
    return r;
}

// ---------------------------------------------------------------------------
// criterion 10: grid shape and reference metadata
// ---------------------------------------------------------------------------

CriterionResult criterion_table_shape(const SweepResult& sweep, const std::vector<int>& sizes) {
    CriterionResult r{10, "grid shape and reference metadata"};
    const double t0 = now_seconds();
    int cells = 0, ok_cells = 0, with_reference = 0;
    bool reference_exact = true;
    const double expected[3][5] = {{0.55, 0.67, 0.74, 0.77, 0.78},
                                   {0.49, 0.60, 0.74, 0.79, 0.79},
                                   {0.49, 0.55, 0.55, 0.62, 0.65}};
    const char* objs[3] = {"rhr", "tib", "cal"};
    for (int o = 0; o < 3; ++o)
        for (size_t si = 0; si < sizes.size(); ++si) {
            const SweepCell* cell = sweep.find(objs[o], sizes[si]);
            if (!cell) continue;
            ++cells;
            ok_cells += cell->ok;
            if (cell->paper_reference) {
                ++with_reference;
                reference_exact &= std::abs(*cell->paper_reference - expected[o][si]) < 1e-9;
                reference_exact &= *cell->paper_reference >= 0.49 && *cell->paper_reference <= 0.79;
            }
        }
    r.seconds = now_seconds() - t0;
    r.pass = cells == 15 && ok_cells == 15 && with_reference == 15 && reference_exact;
    r.detail = std::to_string(cells) + " cells, " + std::to_string(ok_cells) + " ok, " +
               std::to_string(with_reference) + " with reference metadata" +
               (reference_exact ? "" : " (reference values WRONG)");
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: acceptance <path-to-sslchrono-binary>\n");
        return 2;
    }
    const std::string binary = argv[1];

    RunConfig base = resolve_config("", {});
    const int threads = std::max(2u, std::thread::hardware_concurrency());

    std::vector<SweepResult> sweeps;
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        const double t0 = now_seconds();
        std::fprintf(stderr, "[setup] desk-scale sweep, master seed %llu (3 objectives + baseline)...\n",
                     static_cast<unsigned long long>(seed));
        RunConfig cfg = base;
        cfg.seed = seed;
        StudyData study = build_study(cfg);
        SweepSetup setup = cfg.sweep_setup();
        setup.include_baseline = true;
        setup.threads = threads;
        sweeps.push_back(run_sweep(study.cohort_std, study.split, setup));
        std::fprintf(stderr, "[setup] seed %llu done in %.0fs\n",
                     static_cast<unsigned long long>(seed), now_seconds() - t0);
    }

    std::vector<CriterionResult> results;
    results.push_back(criterion_gradients());
    results.push_back(criterion_auc_oracle());
    results.push_back(criterion_invariants());
    results.push_back(criterion_freeze());
    results.push_back(criterion_optimizer(sweeps));
    results.push_back(criterion_ssl_signal(base, sweeps[0]));
    results.push_back(criterion_trend(sweeps, base.adaptation_sizes));
    results.push_back(criterion_pretraining_benefit(sweeps, base.adaptation_sizes.back()));
    results.push_back(criterion_reproducibility(binary));
    results.push_back(criterion_table_shape(sweeps[0], base.adaptation_sizes));

    int failed = 0;
    for (const auto& r : results) {
        std::printf("[%2d] %s  %-55s %s (%.1fs)\n", r.id, r.pass ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str(), r.seconds);
        failed += !r.pass;
    }
    std::printf("%d/%zu acceptance criteria passed\n", static_cast<int>(results.size()) - failed,
                results.size());
    return failed == 0 ? 0 : 1;
}
