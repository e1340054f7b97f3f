#pragma once

#include <utility>
#include <vector>

#include "aai/tensor.hpp"
#include "aai/types.hpp"

namespace aai::dsp {

// Front-end parameters. Window/hop/coefficient count are fixed by the
// pipeline contract; the rest are standard choices, kept adjustable.
struct DspConfig {
    int sample_rate_hz = 16000;
    double window_ms = 25.0;
    double hop_ms = 10.0;
    int n_mfcc = 13;
    int n_mel_filters = 26;
    int fft_size = 512;
    double preemphasis = 0.97;
    int delta_halfwidth = 2;
    double log_floor = 1e-10;

    int window_samples() const {
        return static_cast<int>(window_ms * sample_rate_hz / 1000.0 + 0.5);
    }
    int hop_samples() const {
        return static_cast<int>(hop_ms * sample_rate_hz / 1000.0 + 0.5);
    }
    void validate() const;
};

// Context stacking: W consecutive frames centered on the current one.
struct ContextConfig {
    int window_frames = 11;

    void validate() const;
    int stacked_dim(int base_dim) const { return base_dim * window_frames; }
};

// Number of analysis frames for n_samples of audio, or 0 if too short.
int frame_count(int n_samples, const DspConfig& cfg);

// Center time (s) of frame index i.
double frame_time_s(int i, const DspConfig& cfg);

// audio -> one 13-dim MFCC row per 10 ms hop.
// Pipeline: pre-emphasis, Hamming window, |FFT|^2, mel filterbank,
// log with floor, orthonormal DCT-II keeping coefficients 0..n_mfcc-1.
Mat compute_mfcc(const AudioBuffer& audio, const DspConfig& cfg);

// Regression deltas with replicated edges; delta2 applies the same operator
// to delta. Input rows are frames.
std::pair<Mat, Mat> compute_deltas(const Mat& frames, int halfwidth);

// MFCC + deltas in one step: T x 39.
Mat compute_features(const AudioBuffer& audio, const DspConfig& cfg);

// Frame t becomes the concatenation of frames t-(W-1)/2 .. t+(W-1)/2 with
// out-of-range indices clamped to the sequence ends.
Mat stack_context(const Mat& frames, const ContextConfig& ctx);

struct FeatureStats {
    Vec mean;
    Vec std;
};

// Per-dimension mean and population std over all rows.
FeatureStats compute_stats(const Mat& data);
FeatureStats compute_stats(const std::vector<const Mat*>& blocks);

// Throws NumericError naming the first dimension whose std is below 1e-8.
void check_stats(const FeatureStats& stats);

Mat zscore(const Mat& data, const FeatureStats& stats);
Mat denormalize(const Mat& data, const FeatureStats& stats);
Vec zscore(const Vec& v, const FeatureStats& stats);
Vec denormalize(const Vec& v, const FeatureStats& stats);

} // namespace aai::dsp
