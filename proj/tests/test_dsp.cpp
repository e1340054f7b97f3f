#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "aai/dsp.hpp"
#include "mfcc_oracle.hpp"

using namespace aai;
using dsp::DspConfig;

namespace {

AudioBuffer make_audio(int n_samples, double value = 0.0) {
    AudioBuffer a;
    a.sample_rate_hz = 16000;
    a.samples.assign(static_cast<std::size_t>(n_samples), value);
    return a;
}

AudioBuffer random_audio(int n_samples, Rng& rng, double amp = 0.5) {
    AudioBuffer a = make_audio(n_samples);
    for (auto& s : a.samples) s = rng.uniform(-amp, amp);
    return a;
}

} // namespace

TEST_CASE("frame count follows the hop formula") {
    DspConfig cfg;
    // floor((16000-400)/160)+1 = 98 frames for one second of audio
    CHECK(dsp::frame_count(16000, cfg) == 98);
    CHECK(dsp::frame_count(400, cfg) == 1);
    CHECK(dsp::frame_count(399, cfg) == 0);
    CHECK(dsp::frame_count(559, cfg) == 1);
    CHECK(dsp::frame_count(560, cfg) == 2);

    const Mat m = dsp::compute_mfcc(make_audio(16000), cfg);
    CHECK(m.rows() == 98);
    CHECK(m.cols() == 13);
}

TEST_CASE("frame count formula holds across lengths") {
    DspConfig cfg;
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 400 + static_cast<int>(rng.below(12000));
        const Mat m = dsp::compute_mfcc(random_audio(n, rng), cfg);
        CHECK(m.rows() == (n - 400) / 160 + 1);
    }
}

TEST_CASE("too-short audio and wrong rate are rejected") {
    DspConfig cfg;
    CHECK_THROWS_AS(dsp::compute_mfcc(make_audio(399), cfg), DataError);
    AudioBuffer a = make_audio(16000);
    a.sample_rate_hz = 8000;
    CHECK_THROWS_AS(dsp::compute_mfcc(a, cfg), ConfigError);
}

TEST_CASE("digital silence gives identical log-floor frames") {
    DspConfig cfg;
    const Mat m = dsp::compute_mfcc(make_audio(8000), cfg);
    // DCT of the constant log(floor) vector: c0 = sqrt(M) * log(floor), rest 0.
    const double c0 = std::sqrt(static_cast<double>(cfg.n_mel_filters)) *
                      std::log(cfg.log_floor);
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
        CHECK(m(t, 0) == doctest::Approx(c0).epsilon(1e-12));
        for (Eigen::Index k = 1; k < m.cols(); ++k)
            CHECK(m(t, k) == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
        CHECK((m.row(t) - m.row(0)).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("1 kHz sine concentrates energy near 1 kHz mel filters") {
    DspConfig cfg;
    AudioBuffer a = make_audio(4000);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        a.samples[i] = std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(i) / 16000.0);
    // Check against the brute-force oracle, which exposes the mel energies
    // via the full pipeline comparison below; here check the implementation
    // runs and matches the oracle on this deterministic signal.
    const Mat impl = dsp::compute_mfcc(a, cfg);
    const auto orc = oracle::mfcc(a.samples, cfg);
    REQUIRE(static_cast<std::size_t>(impl.rows()) == orc.size());
    for (Eigen::Index t = 0; t < impl.rows(); ++t) {
        double num = 0.0, den = 0.0;
        for (int k = 0; k < 13; ++k) {
            const double d = impl(t, k) - orc[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
            num += d * d;
            den += orc[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)] *
                   orc[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
        }
        CHECK(std::sqrt(num) <= 1e-6 * std::max(std::sqrt(den), 1e-12));
    }
}

TEST_CASE("front end matches the brute-force DFT oracle on random signals") {
    DspConfig cfg;
    Rng rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        const AudioBuffer a = random_audio(1600, rng); // 0.1 s
        const Mat impl = dsp::compute_mfcc(a, cfg);
        const auto orc = oracle::mfcc(a.samples, cfg);
        REQUIRE(static_cast<std::size_t>(impl.rows()) == orc.size());
        double worst = 0.0;
        for (Eigen::Index t = 0; t < impl.rows(); ++t) {
            double num = 0.0, den = 0.0;
            for (int k = 0; k < 13; ++k) {
                const double o = orc[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
                const double d = impl(t, k) - o;
                num += d * d;
                den += o * o;
            }
            worst = std::max(worst, std::sqrt(num / std::max(den, 1e-300)));
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("deltas of a constant sequence vanish") {
    const Mat frames = Mat::Constant(12, 13, 3.25);
    const auto [delta, delta2] = dsp::compute_deltas(frames, 2);
    CHECK(delta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(delta2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("deltas of a linear ramp equal the slope in the interior") {
    Mat frames(10, 1);
    for (int t = 0; t < 10; ++t) frames(t, 0) = t;
    const auto [delta, delta2] = dsp::compute_deltas(frames, 2);
    // Delta_t = [1*(c_{t+1}-c_{t-1}) + 2*(c_{t+2}-c_{t-2})] / (2*(1+4)) = 1
    for (int t = 2; t < 8; ++t)
        CHECK(delta(t, 0) == doctest::Approx(1.0).epsilon(1e-12));
    // Delta2 vanishes only where every neighbor's delta is interior too.
    for (int t = 4; t < 6; ++t)
        CHECK(delta2(t, 0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("single frame has zero deltas") {
    const Mat frames = Mat::Constant(1, 13, 0.7);
    const auto [delta, delta2] = dsp::compute_deltas(frames, 2);
    CHECK(delta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(delta2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("context stacking dimensions") {
    Rng rng(5);
    Mat frames(20, 39);
    for (Eigen::Index i = 0; i < frames.size(); ++i)
        frames.data()[i] = rng.uniform(-1, 1);

    for (int w : {1, 3, 5, 7, 11}) {
        const Mat out = dsp::stack_context(frames, dsp::ContextConfig{w});
        CHECK(out.rows() == frames.rows());
        CHECK(out.cols() == 39 * w);
    }
    CHECK(dsp::stack_context(frames, dsp::ContextConfig{11}).cols() == 429);
    CHECK_THROWS_AS(dsp::stack_context(frames, dsp::ContextConfig{4}), ConfigError);
}

TEST_CASE("context W=1 is the identity") {
    Rng rng(6);
    Mat frames(7, 39);
    for (Eigen::Index i = 0; i < frames.size(); ++i)
        frames.data()[i] = rng.uniform(-1, 1);
    const Mat out = dsp::stack_context(frames, dsp::ContextConfig{1});
    CHECK((out - frames).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("context clamps at sequence edges") {
    Mat frames(2, 2);
    frames << 1, 2, 3, 4; // f0 = [1,2], f1 = [3,4]
    const Mat out = dsp::stack_context(frames, dsp::ContextConfig{3});
    REQUIRE(out.cols() == 6);
    // frame 0 = [f0, f0, f1], frame 1 = [f0, f1, f1]
    Mat expect(2, 6);
    expect << 1, 2, 1, 2, 3, 4, 1, 2, 3, 4, 3, 4;
    CHECK((out - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("context of a constant sequence repeats the constant") {
    Mat frames = Mat::Constant(9, 3, 1.5);
    const Mat out = dsp::stack_context(frames, dsp::ContextConfig{5});
    CHECK(out.rows() == 9);
    CHECK(out.cols() == 15);
    CHECK((out.array() - 1.5).abs().maxCoeff() == 0.0);
}

TEST_CASE("zscore normalizes and denormalizes") {
    Rng rng(11);
    Mat data(200, 4);
    for (Eigen::Index i = 0; i < data.size(); ++i)
        data.data()[i] = rng.uniform(-3, 9);

    const auto stats = dsp::compute_stats(data);
    const Mat normed = dsp::zscore(data, stats);

    // Normalized by its own statistics: mean ~ 0, std ~ 1.
    const auto check_stats = dsp::compute_stats(normed);
    CHECK(check_stats.mean.cwiseAbs().maxCoeff() < 1e-9);
    CHECK((check_stats.std.array() - 1.0).abs().maxCoeff() < 1e-6);

    const Mat back = dsp::denormalize(normed, stats);
    CHECK(((back - data).cwiseAbs().array() /
           data.cwiseAbs().array().max(1.0)).maxCoeff() < 1e-9);
}

TEST_CASE("zscore identity stats is the identity") {
    Mat data(3, 2);
    data << 1, 2, 3, 4, 5, 6;
    dsp::FeatureStats stats;
    stats.mean = Vec::Zero(2);
    stats.std = Vec::Ones(2);
    CHECK((dsp::zscore(data, stats) - data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degenerate dimension is reported by index") {
    Mat data(50, 3);
    Rng rng(13);
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        data(r, 0) = rng.uniform(-1, 1);
        data(r, 1) = 42.0; // constant -> zero variance
        data(r, 2) = rng.uniform(-1, 1);
    }
    const auto stats = dsp::compute_stats(data);
    try {
        dsp::check_stats(stats);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("dimension 1") != std::string::npos);
    }
    CHECK_THROWS_AS(dsp::zscore(data, stats), NumericError);
}

TEST_CASE("config validation") {
    DspConfig bad;
    bad.hop_ms = 30.0; // hop > window
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    DspConfig bad2;
    bad2.n_mfcc = 30; // more coefficients than filters
    CHECK_THROWS_AS(bad2.validate(), ConfigError);
    DspConfig bad3;
    bad3.fft_size = 256; // smaller than the 400-sample window
    CHECK_THROWS_AS(bad3.validate(), ConfigError);
}
