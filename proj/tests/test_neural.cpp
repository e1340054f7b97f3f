#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "aai/nn/adam.hpp"
#include "aai/nn/checkpoint.hpp"
#include "aai/nn/layers.hpp"
#include "aai/nn/loss.hpp"
#include "aai/nn/train.hpp"
#include "gradcheck.hpp"

using namespace aai;
namespace fs = std::filesystem;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double amp = 1.0) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-amp, amp);
    return m;
}

std::vector<nn::ParamRef> lstm_param_refs(nn::BiLstmParams& p) {
    std::vector<nn::ParamRef> refs;
    for (auto [d, tag] : {std::pair{&p.fwd, "f"}, std::pair{&p.bwd, "b"}}) {
        refs.push_back({std::string(tag) + ".W", d->W.data(), d->W.rows(), d->W.cols()});
        refs.push_back({std::string(tag) + ".U", d->U.data(), d->U.rows(), d->U.cols()});
        refs.push_back({std::string(tag) + ".b", d->b.data(), d->b.size(), 1});
    }
    return refs;
}

std::vector<nn::ParamRef> lstm_grad_refs(nn::BiLstmGrads& g) {
    std::vector<nn::ParamRef> refs;
    for (auto [d, tag] : {std::pair{&g.fwd, "f"}, std::pair{&g.bwd, "b"}}) {
        refs.push_back({std::string(tag) + ".W", d->W.data(), d->W.rows(), d->W.cols()});
        refs.push_back({std::string(tag) + ".U", d->U.data(), d->U.rows(), d->U.cols()});
        refs.push_back({std::string(tag) + ".b", d->b.data(), d->b.size(), 1});
    }
    return refs;
}

} // namespace

// ---- losses -----------------------------------------------------------------

TEST_CASE("mse values") {
    Mat y(1, 2), yhat(1, 2);
    y << 1, 2;
    yhat << 0, 0;
    CHECK(nn::mse(y, yhat) == doctest::Approx(2.5).epsilon(1e-15)); // (1+4)/2
    CHECK(nn::mse(y, y) == 0.0);
    Mat bad(2, 2);
    CHECK_THROWS_AS(nn::mse(y, bad), ShapeError);
}

TEST_CASE("mse gradient matches finite differences") {
    Rng rng(1);
    Mat y = random_mat(4, 3, rng);
    Mat yhat = random_mat(4, 3, rng);
    Mat grad = nn::mse_grad(y, yhat);
    std::vector<nn::ParamRef> params{{"yhat", yhat.data(), yhat.rows(), yhat.cols()}};
    std::vector<nn::ParamRef> analytic{{"g", grad.data(), grad.rows(), grad.cols()}};
    const auto rep = gradcheck::compare(params, analytic, [&] { return nn::mse(y, yhat); });
    CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("cross entropy closed forms") {
    SUBCASE("perfect one-hot prediction") {
        Mat probs = Mat::Zero(3, 43);
        std::vector<int> labels{5, 0, 42};
        for (int r = 0; r < 3; ++r) probs(r, labels[static_cast<std::size_t>(r)]) = 1.0;
        CHECK(nn::cross_entropy(probs, labels) == doctest::Approx(0.0).scale(1.0));
    }
    SUBCASE("uniform prediction over 43 classes") {
        Mat probs = Mat::Constant(4, 43, 1.0 / 43.0);
        std::vector<int> labels{0, 10, 20, 42};
        CHECK(nn::cross_entropy(probs, labels) ==
              doctest::Approx(std::log(43.0)).epsilon(1e-12)); // 3.7612...
    }
    SUBCASE("two-class toy with 0.8 on the truth") {
        Mat probs(1, 2);
        probs << 0.8, 0.2;
        std::vector<int> labels{0};
        CHECK(nn::cross_entropy(probs, labels) ==
              doctest::Approx(-std::log(0.8)).epsilon(1e-12)); // 0.22314...
    }
    SUBCASE("label out of range") {
        Mat probs = Mat::Constant(1, 43, 1.0 / 43.0);
        CHECK_THROWS_AS(nn::cross_entropy(probs, {43}), DataError);
    }
    SUBCASE("not a distribution") {
        Mat probs = Mat::Constant(1, 43, 0.5);
        CHECK_THROWS_AS(nn::cross_entropy(probs, {0}), DataError);
    }
}

TEST_CASE("combined loss is the weighted sum and linear in alpha") {
    CHECK(nn::combined_loss(2.5, 0.5, 1.0) == 3.0);
    CHECK(nn::combined_loss(7.0, 123.0, 0.0) == 7.0);
    CHECK(nn::combined_loss(1.0, 1.0, 2.0) == 3.0);
    Rng rng(2);
    const double m = rng.uniform(0, 5), c = rng.uniform(0, 5);
    const double a1 = rng.uniform(0, 3), a2 = rng.uniform(0, 3);
    // linearity: L(a1) + L(a2) - L(0) == L(a1 + a2)
    CHECK(nn::combined_loss(m, c, a1) + nn::combined_loss(m, c, a2) -
              nn::combined_loss(m, c, 0.0) ==
          doctest::Approx(nn::combined_loss(m, c, a1 + a2)).epsilon(1e-12));
    CHECK_THROWS_AS(nn::combined_loss(1.0, 1.0, -0.5), ConfigError);
}

TEST_CASE("softmax cross entropy gradient matches finite differences") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int t = 1 + static_cast<int>(rng.below(7));
        const int c = 2 + static_cast<int>(rng.below(7));
        Mat logits = random_mat(t, c, rng, 2.0);
        std::vector<int> labels;
        for (int i = 0; i < t; ++i) labels.push_back(static_cast<int>(rng.below(c)));
        Mat dlogits;
        nn::softmax_cross_entropy(logits, labels, &dlogits);
        std::vector<nn::ParamRef> params{{"l", logits.data(), logits.rows(), logits.cols()}};
        std::vector<nn::ParamRef> analytic{{"g", dlogits.data(), dlogits.rows(), dlogits.cols()}};
        const auto rep = gradcheck::compare(params, analytic, [&] {
            return nn::softmax_cross_entropy(logits, labels);
        });
        CHECK(rep.max_rel_error < 1e-4);
    }
}

TEST_CASE("softmax rows are positive and sum to one") {
    Rng rng(4);
    const Mat logits = random_mat(50, 43, rng, 8.0);
    const Mat p = nn::softmax_rows(logits);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
        CHECK(p.row(r).minCoeff() > 0.0);
        CHECK(std::abs(p.row(r).sum() - 1.0) <= 1e-9);
    }
}

TEST_CASE("masked losses ignore padding entirely") {
    Rng rng(5);
    const int t = 6, d = 4, c = 5;
    Mat y = random_mat(t, d, rng), yhat = random_mat(t, d, rng);
    Mat probs = nn::softmax_rows(random_mat(t, c, rng));
    std::vector<int> labels;
    for (int i = 0; i < t; ++i) labels.push_back(static_cast<int>(rng.below(c)));
    std::vector<std::uint8_t> mask(t, 1);

    const double mse0 = nn::mse_masked(y, yhat, mask);
    const double ce0 = nn::cross_entropy_masked(probs, labels, mask);
    CHECK(mse0 == doctest::Approx(nn::mse(y, yhat)).epsilon(1e-15));

    // Append padded frames: mask 0, arbitrary contents.
    const int pad = 3;
    Mat y2(t + pad, d), yhat2(t + pad, d);
    y2.topRows(t) = y;
    yhat2.topRows(t) = yhat;
    y2.bottomRows(pad) = random_mat(pad, d, rng, 100.0);
    yhat2.bottomRows(pad) = random_mat(pad, d, rng, 100.0);
    Mat probs2(t + pad, c);
    probs2.topRows(t) = probs;
    probs2.bottomRows(pad) = nn::softmax_rows(random_mat(pad, c, rng, 3.0));
    auto labels2 = labels;
    auto mask2 = mask;
    for (int i = 0; i < pad; ++i) {
        labels2.push_back(static_cast<int>(rng.below(c)));
        mask2.push_back(0);
    }
    CHECK(std::abs(nn::mse_masked(y2, yhat2, mask2) - mse0) <= 1e-12);
    CHECK(std::abs(nn::cross_entropy_masked(probs2, labels2, mask2) - ce0) <= 1e-12);
}

// ---- layers -----------------------------------------------------------------

TEST_CASE("dense gradients match finite differences") {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const int t = 1 + static_cast<int>(rng.below(7));
        const int in = 2 + static_cast<int>(rng.below(7));
        const int out = 2 + static_cast<int>(rng.below(7));
        nn::DenseParams p;
        p.init(out, in, trial % 2 ? nn::Activation::Tanh : nn::Activation::Identity, rng);
        Mat x = random_mat(t, in, rng);
        const Mat G = random_mat(t, out, rng);

        auto loss = [&] { return (nn::dense_forward(p, x).array() * G.array()).sum(); };
        nn::DenseCache cache;
        nn::dense_forward(p, x, &cache);
        auto grads = nn::DenseGrads::zeros_like(p);
        Mat dx = nn::dense_backward(p, cache, G, grads);

        std::vector<nn::ParamRef> params{{"W", p.W.data(), p.W.rows(), p.W.cols()},
                                         {"b", p.b.data(), p.b.size(), 1},
                                         {"x", x.data(), x.rows(), x.cols()}};
        std::vector<nn::ParamRef> analytic{{"W", grads.W.data(), grads.W.rows(), grads.W.cols()},
                                           {"b", grads.b.data(), grads.b.size(), 1},
                                           {"x", dx.data(), dx.rows(), dx.cols()}};
        const auto rep = gradcheck::compare(params, analytic, loss);
        CHECK(rep.max_rel_error < 1e-4);
    }
}

TEST_CASE("bilstm forward contract") {
    Rng rng(7);
    nn::BiLstmParams p;
    p.init(3, 4, rng);

    SUBCASE("T=1 concatenates two single-step cells") {
        const Mat x = random_mat(1, 4, rng);
        const Mat out = nn::bilstm_forward(p, x);
        REQUIRE(out.rows() == 1);
        REQUIRE(out.cols() == 6);
        // Each direction sees exactly one step from zero state.
        nn::BiLstmParams fwd_only = p;
        fwd_only.bwd = p.fwd;
        const Mat both_fwd = nn::bilstm_forward(fwd_only, x);
        CHECK((both_fwd.leftCols(3) - both_fwd.rightCols(3)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((out.leftCols(3) - both_fwd.leftCols(3)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("zero parameters give zero output") {
        nn::BiLstmParams zero;
        zero.init(3, 4, rng);
        for (auto* d : {&zero.fwd, &zero.bwd}) {
            d->W.setZero();
            d->U.setZero();
            d->b.setZero();
        }
        const Mat out = nn::bilstm_forward(zero, random_mat(5, 4, rng));
        CHECK(out.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("empty sequence is an error") {
        CHECK_THROWS_AS(nn::bilstm_forward(p, Mat(0, 4)), DataError);
    }
    SUBCASE("swapped directions on reversed input") {
        const int t = 6;
        const Mat x = random_mat(t, 4, rng);
        Mat x_rev(t, 4);
        for (int i = 0; i < t; ++i) x_rev.row(i) = x.row(t - 1 - i);
        nn::BiLstmParams swapped = p;
        std::swap(swapped.fwd, swapped.bwd);
        const Mat out = nn::bilstm_forward(p, x);
        const Mat out_sw = nn::bilstm_forward(swapped, x_rev);
        // time-reversed with the two H-blocks swapped
        for (int i = 0; i < t; ++i) {
            CHECK((out_sw.row(i).head(3) - out.row(t - 1 - i).tail(3)).cwiseAbs().maxCoeff() <
                  1e-14);
            CHECK((out_sw.row(i).tail(3) - out.row(t - 1 - i).head(3)).cwiseAbs().maxCoeff() <
                  1e-14);
        }
    }
}

TEST_CASE("bilstm gradients match finite differences") {
    Rng rng(8);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int t = 1 + static_cast<int>(rng.below(7)); // T <= 7
        const int d = 2 + static_cast<int>(rng.below(4)); // D <= 5
        const int h = 2 + static_cast<int>(rng.below(3)); // H <= 4
        nn::BiLstmParams p;
        p.init(h, d, rng);
        Mat x = random_mat(t, d, rng);
        const Mat G = random_mat(t, 2 * h, rng);

        auto loss = [&] { return (nn::bilstm_forward(p, x).array() * G.array()).sum(); };
        nn::BiLstmCache cache;
        nn::bilstm_forward(p, x, &cache);
        auto grads = nn::BiLstmGrads::zeros_like(p);
        Mat dx = nn::bilstm_backward(p, cache, G, grads);

        auto params = lstm_param_refs(p);
        auto analytic = lstm_grad_refs(grads);
        params.push_back({"x", x.data(), x.rows(), x.cols()});
        analytic.push_back({"dx", dx.data(), dx.rows(), dx.cols()});
        const auto rep = gradcheck::compare(params, analytic, loss);
        worst = std::max(worst, rep.max_rel_error);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("bilstm zero upstream gradient gives zero parameter gradients") {
    Rng rng(9);
    nn::BiLstmParams p;
    p.init(3, 4, rng);
    const Mat x = random_mat(5, 4, rng);
    nn::BiLstmCache cache;
    nn::bilstm_forward(p, x, &cache);
    auto grads = nn::BiLstmGrads::zeros_like(p);
    const Mat dx = nn::bilstm_backward(p, cache, Mat::Zero(5, 6), grads);
    CHECK(dx.cwiseAbs().maxCoeff() == 0.0);
    for (auto* d : {&grads.fwd, &grads.bwd}) {
        CHECK(d->W.cwiseAbs().maxCoeff() == 0.0);
        CHECK(d->U.cwiseAbs().maxCoeff() == 0.0);
        CHECK(d->b.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("last-frame loss reaches the whole forward scan but only one backward step") {
    // Loss reads only t = T-1: the forward cell's parameters affect it
    // through every step, the backward cell only through its first scan step
    // (t = T-1). Verified against finite differences.
    Rng rng(10);
    const int t = 5, d = 3, h = 3;
    nn::BiLstmParams p;
    p.init(h, d, rng);
    Mat x = random_mat(t, d, rng);
    Mat G = Mat::Zero(t, 2 * h);
    G.row(t - 1) = random_mat(1, 2 * h, rng);

    auto loss = [&] { return (nn::bilstm_forward(p, x).array() * G.array()).sum(); };
    nn::BiLstmCache cache;
    nn::bilstm_forward(p, x, &cache);
    auto grads = nn::BiLstmGrads::zeros_like(p);
    Mat dx = nn::bilstm_backward(p, cache, G, grads);

    auto params = lstm_param_refs(p);
    auto analytic = lstm_grad_refs(grads);
    params.push_back({"x", x.data(), x.rows(), x.cols()});
    analytic.push_back({"dx", dx.data(), dx.rows(), dx.cols()});
    CHECK(gradcheck::compare(params, analytic, loss).max_rel_error < 1e-4);
    // The backward cell's recurrent matrix never fires on its first step.
    CHECK(grads.bwd.U.cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.fwd.U.cwiseAbs().maxCoeff() > 0.0);
}

// ---- Adam ---------------------------------------------------------------------

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    Vec param = Vec::Constant(4, 1.5);
    Vec grad = Vec::Zero(4);
    std::vector<nn::ParamRef> ps{{"p", param.data(), param.size(), 1}};
    std::vector<nn::ParamRef> gs{{"g", grad.data(), grad.size(), 1}};
    nn::Adam adam(ps);
    for (int i = 0; i < 3; ++i) adam.step(ps, gs);
    CHECK((param.array() == 1.5).all());
}

TEST_CASE("adam: first step moves a scalar by about -lr") {
    Vec param = Vec::Zero(1);
    Vec grad = Vec::Ones(1);
    std::vector<nn::ParamRef> ps{{"p", param.data(), 1, 1}};
    std::vector<nn::ParamRef> gs{{"g", grad.data(), 1, 1}};
    nn::Adam adam(ps);
    adam.step(ps, gs);
    // bias-corrected: mhat = 1, vhat = 1 -> delta = -lr/(1+eps)
    CHECK(param[0] == doctest::Approx(-0.001).epsilon(1e-7));
    CHECK(std::abs(param[0] + 0.001 / (1.0 + 1e-8)) < 1e-15);
}

TEST_CASE("adam: identical runs are byte-identical after 10 steps") {
    auto run = [] {
        Rng rng(77);
        Vec param(16);
        for (Eigen::Index i = 0; i < 16; ++i) param[i] = rng.uniform(-1, 1);
        std::vector<nn::ParamRef> ps{{"p", param.data(), 16, 1}};
        nn::Adam adam(ps);
        Vec grad(16);
        for (int step = 0; step < 10; ++step) {
            for (Eigen::Index i = 0; i < 16; ++i) grad[i] = rng.uniform(-1, 1);
            std::vector<nn::ParamRef> gs{{"g", grad.data(), 16, 1}};
            adam.step(ps, gs);
        }
        return param;
    };
    const Vec a = run(), b = run();
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 16) == 0);
}

TEST_CASE("gradient clipping caps the global norm") {
    Vec g1 = Vec::Constant(3, 10.0), g2 = Vec::Constant(4, -10.0);
    std::vector<nn::ParamRef> gs{{"a", g1.data(), 3, 1}, {"b", g2.data(), 4, 1}};
    const double pre = nn::clip_global_norm(gs, 5.0);
    CHECK(pre == doctest::Approx(std::sqrt(700.0)));
    CHECK(nn::global_norm(gs) == doctest::Approx(5.0).epsilon(1e-12));
    // already small: untouched
    Vec g3 = Vec::Constant(2, 0.1);
    std::vector<nn::ParamRef> gs3{{"c", g3.data(), 2, 1}};
    nn::clip_global_norm(gs3, 5.0);
    CHECK(g3[0] == 0.1);
}

// ---- early stopping -----------------------------------------------------------

TEST_CASE("early stopper: monotonically worsening stops after patience+1 evaluations") {
    nn::EarlyStopper stopper(5);
    int evaluations = 0;
    double loss = 1.0;
    while (true) {
        stopper.observe(loss);
        ++evaluations;
        if (stopper.should_stop()) break;
        loss += 0.1; // always worse
        REQUIRE(evaluations < 100);
    }
    CHECK(evaluations == 6); // 1 best + 5 waiting
}

TEST_CASE("early stopper: improvement resets the counter") {
    nn::EarlyStopper stopper(3);
    CHECK(stopper.observe(1.0));
    CHECK_FALSE(stopper.observe(1.1));
    CHECK_FALSE(stopper.observe(1.2));
    CHECK(stopper.observe(0.9)); // reset
    CHECK(stopper.epochs_since_improvement() == 0);
    CHECK_FALSE(stopper.should_stop());
    stopper.observe(1.0);
    stopper.observe(1.0);
    CHECK_FALSE(stopper.should_stop());
    stopper.observe(1.0);
    CHECK(stopper.should_stop());
    CHECK(stopper.best() == 0.9);
}

// ---- checkpoints ----------------------------------------------------------------

TEST_CASE("checkpoint round trip is bit-exact after one serialization") {
    Rng rng(11);
    Mat w = random_mat(7, 5, rng);
    Vec b(7);
    for (int i = 0; i < 7; ++i) b[i] = rng.uniform(-1, 1);
    std::vector<nn::ParamRef> refs{{"layer.W", w.data(), 7, 5},
                                   {"layer.b", b.data(), 7, 1}};
    nn::CheckpointHeader h;
    h.arch_tag = "ST";
    h.context_frames = 11;
    h.alpha = 1.0;
    h.seed = 42;
    h.hidden = 7;

    const fs::path p1 = fs::temp_directory_path() / "aai_ckpt1.aaic";
    const fs::path p2 = fs::temp_directory_path() / "aai_ckpt2.aaic";
    nn::save_checkpoint(p1, h, refs);
    auto loaded = nn::load_checkpoint(p1);
    CHECK(loaded.header.arch_tag == "ST");
    CHECK(loaded.header.context_frames == 11);
    CHECK(loaded.header.alpha == 1.0);
    CHECK(loaded.header.seed == 42);
    CHECK(loaded.order == std::vector<std::string>{"layer.W", "layer.b"});

    // Write the loaded values again: float->double->float is exact.
    Mat w2 = loaded.blob("layer.W");
    Mat b2m = loaded.blob("layer.b");
    Vec b2 = b2m.col(0);
    std::vector<nn::ParamRef> refs2{{"layer.W", w2.data(), 7, 5},
                                    {"layer.b", b2.data(), 7, 1}};
    nn::save_checkpoint(p2, h, refs2);

    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());
    fs::remove(p1);
    fs::remove(p2);
}

TEST_CASE("checkpoint corruption is rejected without partial loads") {
    Rng rng(12);
    Mat w = random_mat(4, 4, rng);
    std::vector<nn::ParamRef> refs{{"w", w.data(), 4, 4}};
    nn::CheckpointHeader h;
    h.arch_tag = "MT";
    const fs::path p = fs::temp_directory_path() / "aai_ckpt_corrupt.aaic";
    nn::save_checkpoint(p, h, refs);

    SUBCASE("truncated payload") {
        const auto size = fs::file_size(p);
        fs::resize_file(p, size - 9);
        CHECK_THROWS_AS(nn::load_checkpoint(p), DataError);
    }
    SUBCASE("bad magic") {
        std::fstream f(p, std::ios::in | std::ios::out | std::ios::binary);
        f.write("NOPE", 4);
        f.close();
        CHECK_THROWS_AS(nn::load_checkpoint(p), DataError);
    }
    fs::remove(p);
}

// ---- generic train machinery ----------------------------------------------------

TEST_CASE("parallel_indexed is deterministic across worker counts") {
    const std::function<double(int)> fn = [](int i) { return std::sin(i * 0.37) * i; };
    const auto a = nn::parallel_indexed<double>(64, 1, fn);
    const auto b = nn::parallel_indexed<double>(64, 4, fn);
    const auto c = nn::parallel_indexed<double>(64, 7, fn);
    CHECK(a == b);
    CHECK(a == c);
}

TEST_CASE("parallel_indexed propagates worker exceptions") {
    const std::function<int(int)> fn = [](int i) -> int {
        if (i == 13) throw DataError("boom");
        return i;
    };
    CHECK_THROWS_AS(nn::parallel_indexed<int>(20, 3, fn), DataError);
}
