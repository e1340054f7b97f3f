// Test-only brute-force front-end oracle. Independent of src/dsp.cpp: direct
// O(N^2) DFT, its own mel filterbank and DCT evaluation, all written from the
// textbook definitions. Only the configuration numbers are shared.
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "aai/dsp.hpp"

namespace oracle {

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// One frame of MFCCs from pre-emphasized samples via direct DFT summation.
inline std::vector<double> mfcc_frame(const std::vector<double>& windowed,
                                      const aai::dsp::DspConfig& cfg) {
    const int n_fft = cfg.fft_size;
    const int n_bins = n_fft / 2 + 1;

    // Direct DFT: X[k] = sum_n x[n] e^{-2 pi i k n / N}.
    std::vector<double> power(static_cast<std::size_t>(n_bins));
    for (int k = 0; k < n_bins; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t n = 0; n < windowed.size(); ++n) {
            const double ang = -2.0 * M_PI * k * static_cast<double>(n) / n_fft;
            acc += windowed[n] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        power[static_cast<std::size_t>(k)] = std::norm(acc);
    }

    // Triangular mel filters sampled at bin frequencies.
    const double mel_max = hz_to_mel(cfg.sample_rate_hz / 2.0);
    std::vector<double> centers(static_cast<std::size_t>(cfg.n_mel_filters + 2));
    for (int i = 0; i < cfg.n_mel_filters + 2; ++i)
        centers[static_cast<std::size_t>(i)] =
            mel_to_hz(mel_max * i / (cfg.n_mel_filters + 1));

    std::vector<double> logmel(static_cast<std::size_t>(cfg.n_mel_filters));
    for (int m = 0; m < cfg.n_mel_filters; ++m) {
        const double lo = centers[static_cast<std::size_t>(m)];
        const double mid = centers[static_cast<std::size_t>(m + 1)];
        const double hi = centers[static_cast<std::size_t>(m + 2)];
        double e = 0.0;
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * cfg.sample_rate_hz / n_fft;
            double w = 0.0;
            if (f > lo && f < mid)
                w = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                w = (hi - f) / (hi - mid);
            e += w * power[static_cast<std::size_t>(k)];
        }
        logmel[static_cast<std::size_t>(m)] = std::log(std::max(e, cfg.log_floor));
    }

    // Orthonormal DCT-II by direct summation.
    std::vector<double> out(static_cast<std::size_t>(cfg.n_mfcc));
    const int M = cfg.n_mel_filters;
    for (int k = 0; k < cfg.n_mfcc; ++k) {
        double acc = 0.0;
        for (int m = 0; m < M; ++m)
            acc += logmel[static_cast<std::size_t>(m)] *
                   std::cos(M_PI * k * (2 * m + 1) / (2.0 * M));
        out[static_cast<std::size_t>(k)] = acc * std::sqrt((k == 0 ? 1.0 : 2.0) / M);
    }
    return out;
}

// Full pipeline on raw audio: pre-emphasis, framing, Hamming, then per-frame
// brute-force analysis.
inline std::vector<std::vector<double>> mfcc(const std::vector<double>& samples,
                                             const aai::dsp::DspConfig& cfg) {
    const int win = cfg.window_samples();
    const int hop = cfg.hop_samples();
    const int n = static_cast<int>(samples.size());

    std::vector<double> pre(samples.size());
    pre[0] = samples[0];
    for (int i = 1; i < n; ++i)
        pre[static_cast<std::size_t>(i)] =
            samples[static_cast<std::size_t>(i)] -
            cfg.preemphasis * samples[static_cast<std::size_t>(i - 1)];

    const int n_frames = (n - win) / hop + 1;
    std::vector<std::vector<double>> frames;
    for (int t = 0; t < n_frames; ++t) {
        std::vector<double> w(static_cast<std::size_t>(win));
        for (int i = 0; i < win; ++i)
            w[static_cast<std::size_t>(i)] =
                pre[static_cast<std::size_t>(t * hop + i)] *
                (0.54 - 0.46 * std::cos(2.0 * M_PI * i / (win - 1)));
        frames.push_back(mfcc_frame(w, cfg));
    }
    return frames;
}

} // namespace oracle
