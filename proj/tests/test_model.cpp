#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "reference_model.hpp"
#include "sslchrono/model.hpp"
#include "test_support.hpp"

using namespace sslchrono;

namespace {

ModelConfig toy_config() {
    ModelConfig cfg;
    cfg.n_blocks = 2;
    cfg.d_model = 8;
    cfg.n_heads = 1;
    cfg.seq_len = 10;
    cfg.n_channels = 6;
    cfg.dropout_p = 0.1;
    cfg.head_kind = HeadKind::kRegression;
    return cfg;
}

Tensor random_window(const ModelConfig& cfg, Rng& rng, bool requires_grad = false) {
    std::vector<float> data(static_cast<size_t>(cfg.seq_len * cfg.n_channels));
    for (auto& v : data) v = static_cast<float>(rng.normal());
    return Tensor::from({cfg.seq_len, cfg.n_channels}, std::move(data), requires_grad);
}

std::vector<float> all_values(const ModelParams& p) {
    std::vector<float> out;
    for (const auto& np : p.named()) {
        auto v = np.tensor.data();
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

Tensor eval_forward(const ModelParams& params, const Tensor& window) {
    Tape tape;
    tape.set_recording(false);
    Rng unused(0);
    return forward(tape, window, params, Mode::kEval, unused);
}

}  // namespace

TEST_CASE("init_params") {
    ModelConfig cfg = toy_config();
    SUBCASE("same seed gives bitwise-identical parameters") {
        Rng r1(42), r2(42);
        auto a = all_values(init_params(cfg, r1));
        auto b = all_values(init_params(cfg, r2));
        REQUIRE(a.size() == b.size());
        CHECK(std::memcmp(a.data(), b.data(), a.size() * 4) == 0);
    }
    SUBCASE("gamma starts at one, beta and biases at zero") {
        Rng rng(1);
        ModelParams p = init_params(cfg, rng);
        for (float v : p.blocks[0].ln_gamma.data()) CHECK(v == 1.0f);
        for (float v : p.blocks[0].ln_beta.data()) CHECK(v == 0.0f);
        for (float v : p.input_b.data()) CHECK(v == 0.0f);
        for (float v : p.head.bias.data()) CHECK(v == 0.0f);
    }
    SUBCASE("weight spread matches the init scale") {
        ModelConfig big = cfg;
        big.d_model = 64;
        big.n_blocks = 4;
        Rng rng(7);
        ModelParams p = init_params(big, rng);
        double sq = 0.0;
        int64_t n = 0;
        for (const auto& np : p.named()) {
            if (np.name.find(".w_") == std::string::npos) continue;
            for (float v : np.tensor.data()) {
                sq += static_cast<double>(v) * v;
                ++n;
            }
        }
        REQUIRE(n >= 10000);
        const double std_hat = std::sqrt(sq / static_cast<double>(n));
        CHECK(std_hat == doctest::Approx(0.02).epsilon(0.10));
    }
    SUBCASE("every parameter is in exactly one of backbone or head") {
        Rng rng(3);
        ModelParams p = init_params(cfg, rng);
        CHECK(p.backbone_tensors().size() + p.head_tensors().size() == p.named().size());
        int head_count = 0;
        for (const auto& np : p.named()) head_count += np.is_head ? 1 : 0;
        CHECK(head_count == 2);
    }
    SUBCASE("parameter names are unique") {
        Rng rng(3);
        ModelParams p = init_params(cfg, rng);
        std::set<std::string> names;
        for (const auto& np : p.named()) names.insert(np.name);
        CHECK(names.size() == p.named().size());
    }
    SUBCASE("invalid configs are rejected") {
        ModelConfig bad = cfg;
        bad.d_model = 10;
        bad.n_heads = 3;
        CHECK_THROWS_AS(bad.validate(), Error);
    }
}

TEST_CASE("embed") {
    ModelConfig cfg = toy_config();
    Rng rng(5);
    ModelParams p = init_params(cfg, rng);
    SUBCASE("zero window with zero bias reproduces the position table") {
        Tape tape;
        Tensor zero = Tensor::zeros({cfg.seq_len, cfg.n_channels});
        Tensor out = embed(tape, zero, p);
        auto pos = p.pos_emb.data();
        auto ov = out.data();
        for (size_t i = 0; i < ov.size(); ++i) CHECK(ov[i] == pos[i]);
    }
    SUBCASE("a change on day t only moves row t") {
        Tape tape;
        Tensor w1 = random_window(cfg, rng);
        Tensor w2 = w1.clone();
        w2.at(4, 2) += 1.5f;
        Tensor e1 = embed(tape, w1, p);
        Tensor e2 = embed(tape, w2, p);
        for (int64_t i = 0; i < cfg.seq_len; ++i)
            for (int64_t j = 0; j < cfg.d_model; ++j) {
                if (i == 4) continue;
                CHECK(e1.at(i, j) == e2.at(i, j));
            }
        bool row4_changed = false;
        for (int64_t j = 0; j < cfg.d_model; ++j) row4_changed |= e1.at(4, j) != e2.at(4, j);
        CHECK(row4_changed);
    }
    SUBCASE("matches an independent projection oracle") {
        Tape tape;
        Tensor w = random_window(cfg, rng);
        Tensor out = embed(tape, w, p);
        refmodel::RefParams rp = refmodel::from_params(p);
        for (int64_t i = 0; i < cfg.seq_len; ++i)
            for (int64_t j = 0; j < cfg.d_model; ++j) {
                double acc = rp.values["input_proj.b"][static_cast<size_t>(j)] +
                             rp.values["pos_emb"][static_cast<size_t>(i * cfg.d_model + j)];
                for (int64_t c = 0; c < cfg.n_channels; ++c)
                    acc += static_cast<double>(w.at(i, c)) *
                           rp.values["input_proj.w"][static_cast<size_t>(c * cfg.d_model + j)];
                CHECK(out.at(i, j) == doctest::Approx(acc).epsilon(1e-5));
            }
    }
    SUBCASE("shape mismatch is rejected") {
        Tape tape;
        CHECK_THROWS_AS(embed(tape, Tensor::zeros({3, 6}), p), Error);
    }
}

TEST_CASE("attention") {
    Tape tape;
    SUBCASE("single position returns V") {
        Tensor q = Tensor::from({1, 3}, {5, -2, 1});
        Tensor k = Tensor::from({1, 3}, {0.3f, 0.7f, -1});
        Tensor v = Tensor::from({1, 3}, {10, 20, 30});
        Tensor out = attention(tape, q, k, v, true);
        CHECK(out.at(0, 0) == doctest::Approx(10));
        CHECK(out.at(0, 1) == doctest::Approx(20));
        CHECK(out.at(0, 2) == doctest::Approx(30));
    }
    SUBCASE("zero queries give causal prefix means of V") {
        Rng rng(9);
        const int64_t t = 5, dk = 3;
        std::vector<float> kv(static_cast<size_t>(t * dk)), vv(static_cast<size_t>(t * dk));
        for (auto& x : kv) x = static_cast<float>(rng.normal());
        for (auto& x : vv) x = static_cast<float>(rng.normal());
        Tensor q = Tensor::zeros({t, dk});
        Tensor k = Tensor::from({t, dk}, std::move(kv));
        Tensor v = Tensor::from({t, dk}, std::move(vv));
        Tensor out = attention(tape, q, k, v, true);
        for (int64_t i = 0; i < t; ++i)
            for (int64_t p = 0; p < dk; ++p) {
                double mean = 0.0;
                for (int64_t j = 0; j <= i; ++j) mean += v.at(j, p);
                mean /= static_cast<double>(i + 1);
                CHECK(out.at(i, p) == doctest::Approx(mean).epsilon(1e-5));
            }
    }
    SUBCASE("two-position example against the closed-form oracle") {
        Tensor q = Tensor::from({2, 1}, {1, 1});
        Tensor k = Tensor::from({2, 1}, {1, 2});
        Tensor v = Tensor::from({2, 1}, {10, 20});
        Tensor out = attention(tape, q, k, v, true);
        // row 0 sees only v0; row 1 weights exp(1), exp(2) over sqrt(1)
        const double w0 = std::exp(1.0) / (std::exp(1.0) + std::exp(2.0));
        CHECK(out.at(0, 0) == doctest::Approx(10.0));
        CHECK(out.at(1, 0) == doctest::Approx(10.0 * w0 + 20.0 * (1.0 - w0)).epsilon(1e-6));
    }
    SUBCASE("masked positions get exactly zero weight") {
        Tensor q = Tensor::from({2, 1}, {100, 100});
        Tensor k = Tensor::from({2, 1}, {100, 100});
        Tensor v1 = Tensor::from({2, 1}, {1, 7});
        Tensor v2 = Tensor::from({2, 1}, {1, -9});
        Tensor o1 = attention(tape, q, k, v1, true);
        Tensor o2 = attention(tape, q, k, v2, true);
        CHECK(o1.at(0, 0) == o2.at(0, 0));  // the future value cannot leak at all
    }
}

TEST_CASE("block_forward") {
    ModelConfig cfg = toy_config();
    Rng rng(21);
    ModelParams p = init_params(cfg, rng);
    Tape tape;
    tape.set_recording(false);
    std::vector<float> xv(static_cast<size_t>(cfg.seq_len * cfg.d_model));
    for (auto& e : xv) e = static_cast<float>(rng.normal());
    Tensor x = Tensor::from({cfg.seq_len, cfg.d_model}, std::move(xv));

    SUBCASE("eval mode is dropout-free and repeatable") {
        Rng r1(0), r2(99);
        Tensor a = block_forward(tape, x, p.blocks[0], cfg, Mode::kEval, r1);
        Tensor b = block_forward(tape, x, p.blocks[0], cfg, Mode::kEval, r2);
        auto av = a.data(), bv = b.data();
        CHECK(std::memcmp(av.data(), bv.data(), av.size() * 4) == 0);
    }
    SUBCASE("output rows are normalized") {
        Rng r(0);
        Tensor out = block_forward(tape, x, p.blocks[0], cfg, Mode::kEval, r);
        for (int64_t i = 0; i < cfg.seq_len; ++i) {
            double mean = 0.0;
            for (int64_t j = 0; j < cfg.d_model; ++j) mean += out.at(i, j);
            mean /= static_cast<double>(cfg.d_model);
            CHECK(std::abs(mean) < 1e-5);
        }
    }
    SUBCASE("perturbing row t leaves rows before t unchanged") {
        Rng r(0);
        Tensor out1 = block_forward(tape, x, p.blocks[0], cfg, Mode::kEval, r);
        Tensor x2 = x.clone();
        x2.at(6, 3) += 2.0f;
        Tensor out2 = block_forward(tape, x2, p.blocks[0], cfg, Mode::kEval, r);
        for (int64_t i = 0; i < 6; ++i)
            for (int64_t j = 0; j < cfg.d_model; ++j) CHECK(out1.at(i, j) == out2.at(i, j));
        bool later_changed = false;
        for (int64_t i = 6; i < cfg.seq_len; ++i)
            for (int64_t j = 0; j < cfg.d_model; ++j) later_changed |= out1.at(i, j) != out2.at(i, j);
        CHECK(later_changed);
    }
}

TEST_CASE("forward") {
    ModelConfig cfg = toy_config();
    Rng rng(33);
    ModelParams p = init_params(cfg, rng);

    SUBCASE("regression head yields one scalar per window") {
        Tensor out = eval_forward(p, random_window(cfg, rng));
        CHECK(out.shape() == Shape{1, 1});
    }
    SUBCASE("classification probabilities form a distribution") {
        Rng r2(44);
        ModelParams pc = swap_head(p, HeadKind::kClassification, r2);
        Tape tape;
        tape.set_recording(false);
        Rng unused(0);
        Tensor logits = forward(tape, random_window(cfg, rng), pc, Mode::kEval, unused);
        CHECK(logits.shape() == Shape{1, 2});
        Tensor probs = softmax(tape, logits, -1);
        CHECK(probs.at(0, 0) + probs.at(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(probs.at(0, 0) >= 0.0f);
        CHECK(probs.at(0, 1) >= 0.0f);
    }
    SUBCASE("matches the straight-line 64-bit oracle") {
        refmodel::RefParams rp = refmodel::from_params(p);
        for (int trial = 0; trial < 5; ++trial) {
            Tensor w = random_window(cfg, rng);
            auto wd = w.data();
            const double expected =
                refmodel::forward(rp, std::vector<double>(wd.begin(), wd.end()))[0];
            Tensor out = eval_forward(p, w);
            CHECK(testsup::rel_err(out.at(0, 0), expected) < 1e-4);
        }
    }
    SUBCASE("eval forward is a pure function of window and params") {
        Tensor w = random_window(cfg, rng);
        auto before = all_values(p);
        Tensor a = eval_forward(p, w);
        Tensor b = eval_forward(p, w);
        CHECK(a.at(0, 0) == b.at(0, 0));
        auto after = all_values(p);
        CHECK(std::memcmp(before.data(), after.data(), before.size() * 4) == 0);
    }
    SUBCASE("multi-head configuration still matches the oracle") {
        ModelConfig mh = cfg;
        mh.n_heads = 2;
        Rng r(55);
        ModelParams pm = init_params(mh, r);
        refmodel::RefParams rp = refmodel::from_params(pm);
        Tensor w = random_window(mh, rng);
        auto wd = w.data();
        const double expected = refmodel::forward(rp, std::vector<double>(wd.begin(), wd.end()))[0];
        Tensor out = eval_forward(pm, w);
        CHECK(testsup::rel_err(out.at(0, 0), expected) < 1e-4);
    }
}

TEST_CASE("model properties") {
    ModelConfig cfg = toy_config();
    Rng rng(77);
    ModelParams p = init_params(cfg, rng);

    SUBCASE("causality: changing day t cannot move outputs before t") {
        Tape tape;
        tape.set_recording(false);
        Rng unused(0);
        for (int trial = 0; trial < 5; ++trial) {
            Tensor w1 = random_window(cfg, rng);
            Tensor w2 = w1.clone();
            const int64_t t = 3 + trial;
            for (int64_t c = 0; c < cfg.n_channels; ++c) w2.at(t, c) += 1.0f;
            Tensor x1 = embed(tape, w1, p);
            Tensor x2 = embed(tape, w2, p);
            for (const auto& block : p.blocks) {
                x1 = block_forward(tape, x1, block, cfg, Mode::kEval, unused);
                x2 = block_forward(tape, x2, block, cfg, Mode::kEval, unused);
            }
            for (int64_t i = 0; i < t; ++i)
                for (int64_t j = 0; j < cfg.d_model; ++j)
                    CHECK(std::abs(x1.at(i, j) - x2.at(i, j)) <= 1e-6f);
        }
    }
    SUBCASE("position embeddings break permutation symmetry") {
        Rng r(123);
        Tensor w1 = random_window(cfg, r);
        Tensor w2 = Tensor::zeros(w1.shape());
        for (int64_t i = 0; i < cfg.seq_len; ++i)
            for (int64_t j = 0; j < cfg.n_channels; ++j) w2.at(i, j) = w1.at(cfg.seq_len - 1 - i, j);
        Tensor o1 = eval_forward(p, w1);
        Tensor o2 = eval_forward(p, w2);
        CHECK(o1.at(0, 0) != o2.at(0, 0));
    }
}

TEST_CASE("swap_head") {
    ModelConfig cfg = toy_config();
    Rng rng(88);
    ModelParams p = init_params(cfg, rng);
    SUBCASE("backbone checksum is unchanged") {
        const uint64_t before = backbone_checksum(p);
        Rng r(1);
        ModelParams q = swap_head(p, HeadKind::kClassification, r);
        CHECK(backbone_checksum(q) == before);
    }
    SUBCASE("head shape follows the kind") {
        Rng r(2);
        ModelParams q = swap_head(p, HeadKind::kClassification, r);
        CHECK(q.head.weight.shape() == Shape{cfg.d_model, 2});
        CHECK(q.head.bias.shape() == Shape{2});
        Rng r2(3);
        ModelParams back = swap_head(q, HeadKind::kRegression, r2);
        CHECK(back.head.weight.shape() == Shape{cfg.d_model, 1});
    }
    SUBCASE("same seed gives identical heads") {
        Rng r1(9), r2(9);
        ModelParams a = swap_head(p, HeadKind::kClassification, r1);
        ModelParams b = swap_head(p, HeadKind::kClassification, r2);
        auto av = a.head.weight.data(), bv = b.head.weight.data();
        CHECK(std::memcmp(av.data(), bv.data(), av.size() * 4) == 0);
    }
    SUBCASE("swapping does not alias the source parameters") {
        Rng r(4);
        ModelParams q = swap_head(p, HeadKind::kClassification, r);
        CHECK_FALSE(q.input_w.same_storage(p.input_w));
        q.input_w.at(0) += 1.0f;
        CHECK(q.input_w.at(0) != p.input_w.at(0));
    }
}

// ---------------------------------------------------------------------------
// gradient check of the full model against reference finite differences
// ---------------------------------------------------------------------------

TEST_CASE("model gradients match reference finite differences") {
    ModelConfig cfg = toy_config();
    cfg.dropout_p = 0.0;

    // Choose a parameter draw whose pre-ReLU activations stay clear of the
    // kink; central differences at h = 1e-3 are only valid on smooth regions.
    const int batch = 4;
    ModelParams params;
    std::vector<Tensor> window_tensors;
    std::vector<std::vector<double>> windows64;
    for (uint64_t seed = 2024;; ++seed) {
        params = refmodel::gradcheck_params(cfg, seed);
        window_tensors.clear();
        windows64.clear();
        Rng rng(seed + 7);
        for (int i = 0; i < batch; ++i) {
            Tensor w = random_window(cfg, rng);
            window_tensors.push_back(w);
            auto wd = w.data();
            windows64.emplace_back(wd.begin(), wd.end());
        }
        if (refmodel::min_relu_margin(refmodel::from_params(params), windows64) > 2e-2) break;
    }

    SUBCASE("regression loss") {
        std::vector<float> targets = {0.3f, -0.7f, 1.1f, 0.05f};
        Tape tape;
        Rng unused(0);
        std::vector<Tensor> preds;
        for (int i = 0; i < batch; ++i)
            preds.push_back(
                forward(tape, window_tensors[static_cast<size_t>(i)], params, Mode::kEval, unused));
        Tensor loss = mse_loss(tape, stack_rows(tape, preds),
                               Tensor::from({batch, 1}, std::vector<float>(targets)));
        tape.backward(loss);

        refmodel::RefParams rp = refmodel::from_params(params);
        const std::vector<double> targets64(targets.begin(), targets.end());
        const double h = 1e-3;
        Rng pick(555);
        double max_err = 0.0;
        int checked = 0;
        for (const auto& np : params.named()) {
            REQUIRE(np.tensor.has_grad());
            auto grad = np.tensor.grad();
            for (int probe = 0; probe < 3; ++probe) {
                const auto idx = static_cast<size_t>(pick.below(static_cast<uint64_t>(grad.size())));
                auto& slot = rp.values[np.name][idx];
                const double keep = slot;
                slot = keep + h;
                const double up = refmodel::mse_loss_batch(rp, windows64, targets64);
                slot = keep - h;
                const double down = refmodel::mse_loss_batch(rp, windows64, targets64);
                slot = keep;
                const double fd = (up - down) / (2.0 * h);
                max_err = std::max(max_err, testsup::rel_err(grad[idx], fd));
                ++checked;
            }
        }
        CHECK(checked >= 50);
        CHECK(max_err < 1e-4);
    }

    SUBCASE("classification loss") {
        Rng hr(777);
        ModelParams cls = swap_head(params, HeadKind::kClassification, hr);
        const std::vector<int> labels = {0, 1, 1, 0};
        Tape tape;
        Rng unused(0);
        std::vector<Tensor> logits;
        for (int i = 0; i < batch; ++i)
            logits.push_back(
                forward(tape, window_tensors[static_cast<size_t>(i)], cls, Mode::kEval, unused));
        Tensor loss = cross_entropy_loss(tape, stack_rows(tape, logits), labels);
        tape.backward(loss);

        refmodel::RefParams rp = refmodel::from_params(cls);
        const double h = 1e-3;
        Rng pick(556);
        double max_err = 0.0;
        for (const auto& np : cls.named()) {
            REQUIRE(np.tensor.has_grad());
            auto grad = np.tensor.grad();
            for (int probe = 0; probe < 3; ++probe) {
                const auto idx = static_cast<size_t>(pick.below(static_cast<uint64_t>(grad.size())));
                auto& slot = rp.values[np.name][idx];
                const double keep = slot;
                slot = keep + h;
                const double up = refmodel::ce_loss_batch(rp, windows64, labels);
                slot = keep - h;
                const double down = refmodel::ce_loss_batch(rp, windows64, labels);
                slot = keep;
                const double fd = (up - down) / (2.0 * h);
                max_err = std::max(max_err, testsup::rel_err(grad[idx], fd));
            }
        }
        CHECK(max_err < 1e-4);
    }
}
