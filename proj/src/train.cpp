#include "sslchrono/train.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

namespace sslchrono {

void TrainConfig::validate() const {
    if (epochs < 1) config_error("epochs must be >= 1");
    if (batch_size < 1) config_error("batch_size must be >= 1");
    if (!(clip > 0.0)) config_error("clip must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        config_error("adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) config_error("adam_eps must be positive");
    if (!(lr0 >= 0.0)) config_error("lr0 must be non-negative");
}

double cosine_lr(int64_t step, int64_t total_steps, double lr0) {
    if (total_steps <= 0) value_error("cosine_lr: total_steps must be positive");
    if (step < 0 || step > total_steps)
        value_error("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                    std::to_string(total_steps) + "]");
    constexpr double kPi = 3.141592653589793238462643383279502884;
    return lr0 * 0.5 * (1.0 + std::cos(kPi * static_cast<double>(step) / static_cast<double>(total_steps)));
}

AdamState adam_init(std::span<const Tensor> params) {
    AdamState state;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const auto& p : params) {
        state.m.emplace_back(static_cast<size_t>(p.size()), 0.0f);
        state.v.emplace_back(static_cast<size_t>(p.size()), 0.0f);
    }
    return state;
}

void adam_step(std::span<Tensor> params, AdamState& state, double lr, const TrainConfig& cfg) {
    if (state.m.size() != params.size())
        shape_error("adam_step: state tracks " + std::to_string(state.m.size()) +
                    " parameters, got " + std::to_string(params.size()));
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        if (!p.has_grad()) continue;
        auto g = p.grad();
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        if (m.size() != g.size())
            shape_error("adam_step: moment buffer size mismatch for parameter " + std::to_string(pi));
        auto w = p.data();
        for (size_t i = 0; i < g.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            w[i] = static_cast<float>(static_cast<double>(w[i]) -
                                      lr * mhat / (std::sqrt(vhat) + cfg.adam_eps));
        }
    }
}

Tensor window_tensor(const WindowSample& window) {
    std::vector<float> data(window.inputs.begin(), window.inputs.end());
    return Tensor::from({kWindowDays, kNumChannels}, std::move(data));
}

namespace {

std::vector<std::vector<size_t>> make_batches(size_t n, int batch_size, Rng& rng) {
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    std::vector<std::vector<size_t>> batches;
    for (size_t start = 0; start < n; start += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(n, start + static_cast<size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

void ensure_finite_loss(double loss, int64_t step) {
    if (!std::isfinite(loss))
        numeric_error("non-finite loss at step " + std::to_string(step) +
                      "; reduce the learning rate or inspect the inputs");
}

}  // namespace

std::pair<ModelParams, TrainReport> pretrain(const ModelParams& init,
                                             const std::vector<WindowSample>& windows,
                                             const TrainConfig& cfg) {
    cfg.validate();
    if (windows.empty()) data_error("pretrain: no training windows");
    if (init.config.head_kind != HeadKind::kRegression)
        config_error("pretrain requires a regression head, got classification");
    const auto t0 = std::chrono::steady_clock::now();

    ModelParams params = clone_params(init);
    std::vector<Tensor> trainable = params.all_tensors();
    AdamState state = adam_init(trainable);

    Rng shuffle_rng = Rng(cfg.seed).stream(1);
    Rng dropout_rng = Rng(cfg.seed).stream(2);

    const int64_t batches_per_epoch =
        static_cast<int64_t>((windows.size() + static_cast<size_t>(cfg.batch_size) - 1) /
                             static_cast<size_t>(cfg.batch_size));
    const int64_t total_steps = batches_per_epoch * cfg.epochs;

    TrainReport report;
    report.epoch_loss.reserve(static_cast<size_t>(cfg.epochs));
    report.lr_trace.reserve(static_cast<size_t>(total_steps));
    report.grad_norm_trace.reserve(static_cast<size_t>(total_steps));

    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto batches = make_batches(windows.size(), cfg.batch_size, shuffle_rng);
        double loss_sum = 0.0;
        int64_t loss_count = 0;
        for (const auto& batch : batches) {
            Tape tape;
            Tensor loss;
            try {
                std::vector<Tensor> preds;
                std::vector<float> targets;
                preds.reserve(batch.size());
                targets.reserve(batch.size());
                for (size_t idx : batch) {
                    preds.push_back(
                        forward(tape, window_tensor(windows[idx]), params, Mode::kTrain, dropout_rng));
                    targets.push_back(windows[idx].target);
                }
                Tensor pred = stack_rows(tape, preds);
                Tensor target = Tensor::from({static_cast<int64_t>(batch.size()), 1},
                                             std::vector<float>(targets));
                loss = mse_loss(tape, pred, target);
            } catch (const Error& e) {
                if (std::string(e.category()) == "numeric")
                    numeric_error("step " + std::to_string(step) + ": " + e.what());
                throw;
            }
            const double loss_value = static_cast<double>(loss.item());
            ensure_finite_loss(loss_value, step);
            loss_sum += loss_value * static_cast<double>(batch.size());
            loss_count += static_cast<int64_t>(batch.size());

            for (auto& p : trainable) p.zero_grad();
            tape.backward(loss);
            const double lr = cosine_lr(step, total_steps, cfg.lr0);
            const double raw_norm = clip_global_norm(trainable, cfg.clip);
            adam_step(trainable, state, lr, cfg);
            report.lr_trace.push_back(lr);
            report.grad_norm_trace.push_back(std::min(raw_norm, cfg.clip));
            ++step;
        }
        report.epoch_loss.push_back(loss_sum / static_cast<double>(loss_count));
    }
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(params), std::move(report)};
}

std::vector<float> window_representation(const ModelParams& params, const WindowSample& window) {
    Tape tape;
    tape.set_recording(false);
    Rng unused(0);
    Tensor rep = backbone_forward(tape, window_tensor(window), params, Mode::kEval, unused);
    auto v = rep.data();
    return {v.begin(), v.end()};
}

std::pair<HeadParams, TrainReport> train_classifier_head(const std::vector<std::vector<float>>& reps,
                                                         const std::vector<int>& labels,
                                                         const TrainConfig& cfg, Rng& head_rng,
                                                         int d_model) {
    cfg.validate();
    if (reps.empty()) data_error("head training: no samples");
    if (reps.size() != labels.size()) shape_error("head training: reps/labels length mismatch");
    const auto t0 = std::chrono::steady_clock::now();

    TrainReport report;
    {
        int n_pos = 0;
        for (int y : labels) n_pos += y;
        if (n_pos == 0 || n_pos == static_cast<int>(labels.size()))
            report.warnings.push_back(
                "adaptation labels are single-class; downstream ranking metrics are undefined");
    }

    HeadParams head;
    {
        std::vector<float> w(static_cast<size_t>(d_model) * 2);
        for (auto& v : w) v = static_cast<float>(head_rng.normal(0.0, kInitStd));
        head.weight = Tensor::from({d_model, 2}, std::move(w), true);
        head.bias = Tensor::filled({2}, 0.0f, true);
    }
    std::vector<Tensor> trainable = {head.weight, head.bias};
    AdamState state = adam_init(trainable);
    Rng shuffle_rng = Rng(cfg.seed).stream(3);

    const int64_t batches_per_epoch =
        static_cast<int64_t>((reps.size() + static_cast<size_t>(cfg.batch_size) - 1) /
                             static_cast<size_t>(cfg.batch_size));
    const int64_t total_steps = batches_per_epoch * cfg.epochs;
    int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto batches = make_batches(reps.size(), cfg.batch_size, shuffle_rng);
        double loss_sum = 0.0;
        int64_t loss_count = 0;
        for (const auto& batch : batches) {
            Tape tape;
            std::vector<float> x;
            std::vector<int> y;
            x.reserve(batch.size() * static_cast<size_t>(d_model));
            y.reserve(batch.size());
            for (size_t idx : batch) {
                x.insert(x.end(), reps[idx].begin(), reps[idx].end());
                y.push_back(labels[idx]);
            }
            Tensor input = Tensor::from({static_cast<int64_t>(batch.size()), d_model}, std::move(x));
            Tensor logits = apply_head(tape, input, head);
            Tensor loss = cross_entropy_loss(tape, logits, y);
            const double loss_value = static_cast<double>(loss.item());
            ensure_finite_loss(loss_value, step);
            loss_sum += loss_value * static_cast<double>(batch.size());
            loss_count += static_cast<int64_t>(batch.size());

            for (auto& p : trainable) p.zero_grad();
            tape.backward(loss);
            const double lr = cosine_lr(step, total_steps, cfg.lr0);
            const double raw_norm = clip_global_norm(trainable, cfg.clip);
            adam_step(trainable, state, lr, cfg);
            report.lr_trace.push_back(lr);
            report.grad_norm_trace.push_back(std::min(raw_norm, cfg.clip));
            ++step;
        }
        report.epoch_loss.push_back(loss_sum / static_cast<double>(loss_count));
    }
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(head), std::move(report)};
}

std::pair<ModelParams, TrainReport> finetune(const ModelParams& pretrained,
                                             const std::vector<WindowSample>& windows,
                                             const TrainConfig& cfg) {
    cfg.validate();
    if (windows.empty()) data_error("finetune: adaptation set is empty");

    ModelParams params = clone_params(pretrained);
    params.config.head_kind = HeadKind::kClassification;

    // The backbone is frozen: representations are fixed, so compute them once
    // in eval mode and train only the fresh head on them. Backbone tensors
    // are excluded from the optimizer entirely.
    std::vector<std::vector<float>> reps;
    reps.reserve(windows.size());
    std::vector<int> labels;
    labels.reserve(windows.size());
    for (const auto& w : windows) {
        reps.push_back(window_representation(params, w));
        labels.push_back(w.label);
    }
    Rng head_rng = Rng(cfg.seed).stream(4);
    auto [head, report] = train_classifier_head(reps, labels, cfg, head_rng, params.config.d_model);
    params.head = head;
    return {std::move(params), std::move(report)};
}

}  // namespace sslchrono
