#include "aai/dsp.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace aai::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Triangular filters on the mel scale from 0 Hz to Nyquist, weights sampled
// at the continuous bin frequencies. Rows: filters, cols: fft_size/2+1 bins.
Mat build_mel_filterbank(const DspConfig& cfg) {
    const int n_bins = cfg.fft_size / 2 + 1;
    const double f_max = cfg.sample_rate_hz / 2.0;
    const double mel_max = hz_to_mel(f_max);
    std::vector<double> centers(cfg.n_mel_filters + 2);
    for (int i = 0; i < cfg.n_mel_filters + 2; ++i)
        centers[i] = mel_to_hz(mel_max * i / (cfg.n_mel_filters + 1));

    Mat fb = Mat::Zero(cfg.n_mel_filters, n_bins);
    for (int m = 0; m < cfg.n_mel_filters; ++m) {
        const double lo = centers[m], mid = centers[m + 1], hi = centers[m + 2];
        for (int k = 0; k < n_bins; ++k) {
            const double f = static_cast<double>(k) * cfg.sample_rate_hz / cfg.fft_size;
            double w = 0.0;
            if (f > lo && f < mid)
                w = (f - lo) / (mid - lo);
            else if (f >= mid && f < hi)
                w = (hi - f) / (hi - mid);
            fb(m, k) = w;
        }
    }
    return fb;
}

// Orthonormal DCT-II matrix, n_mfcc x n_mel rows kept.
Mat build_dct(int n_mfcc, int n_mel) {
    Mat dct(n_mfcc, n_mel);
    for (int k = 0; k < n_mfcc; ++k) {
        const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_mel);
        for (int m = 0; m < n_mel; ++m)
            dct(k, m) = scale * std::cos(kPi * k * (2 * m + 1) / (2.0 * n_mel));
    }
    return dct;
}

} // namespace

void DspConfig::validate() const {
    if (sample_rate_hz <= 0) throw ConfigError("DspConfig: sample rate must be positive");
    if (!(window_ms > hop_ms && hop_ms > 0))
        throw ConfigError("DspConfig: need window_ms > hop_ms > 0");
    if (n_mfcc <= 0 || n_mfcc > n_mel_filters)
        throw ConfigError("DspConfig: need 0 < n_mfcc <= n_mel_filters");
    if (fft_size < window_samples())
        throw ConfigError("DspConfig: fft_size smaller than the analysis window");
    if ((fft_size & (fft_size - 1)) != 0)
        throw ConfigError("DspConfig: fft_size must be a power of two");
    if (delta_halfwidth < 1) throw ConfigError("DspConfig: delta_halfwidth must be >= 1");
    if (log_floor <= 0) throw ConfigError("DspConfig: log_floor must be positive");
}

void ContextConfig::validate() const {
    if (window_frames < 1 || window_frames % 2 == 0)
        throw ConfigError("ContextConfig: window_frames must be odd and >= 1");
}

int frame_count(int n_samples, const DspConfig& cfg) {
    const int win = cfg.window_samples();
    if (n_samples < win) return 0;
    return (n_samples - win) / cfg.hop_samples() + 1;
}

double frame_time_s(int i, const DspConfig& cfg) {
    return (i * cfg.hop_samples() + cfg.window_samples() / 2.0) / cfg.sample_rate_hz;
}

Mat compute_mfcc(const AudioBuffer& audio, const DspConfig& cfg) {
    cfg.validate();
    if (audio.sample_rate_hz != cfg.sample_rate_hz)
        throw ConfigError("compute_mfcc: audio sample rate " +
                          std::to_string(audio.sample_rate_hz) + " does not match config " +
                          std::to_string(cfg.sample_rate_hz));
    const int win = cfg.window_samples();
    const int hop = cfg.hop_samples();
    const int n = static_cast<int>(audio.samples.size());
    const int n_frames = frame_count(n, cfg);
    if (n_frames <= 0)
        throw DataError("compute_mfcc: audio shorter than one analysis window");

    // Pre-emphasis over the whole signal; first sample passes through.
    std::vector<double> pre(n);
    pre[0] = audio.samples[0];
    for (int i = 1; i < n; ++i)
        pre[i] = audio.samples[i] - cfg.preemphasis * audio.samples[i - 1];

    std::vector<double> hamming(win);
    for (int i = 0; i < win; ++i)
        hamming[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * i / (win - 1));

    const Mat fb = build_mel_filterbank(cfg);
    const Mat dct = build_dct(cfg.n_mfcc, cfg.n_mel_filters);
    const int n_bins = cfg.fft_size / 2 + 1;

    Mat out(n_frames, cfg.n_mfcc);
    std::vector<std::complex<double>> buf(cfg.fft_size);
    Vec power(n_bins);
    for (int t = 0; t < n_frames; ++t) {
        const int off = t * hop;
        for (int i = 0; i < win; ++i)
            buf[i] = std::complex<double>(pre[off + i] * hamming[i], 0.0);
        for (int i = win; i < cfg.fft_size; ++i) buf[i] = {0.0, 0.0};
        fft_radix2(buf);
        for (int k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);

        Vec mel = fb * power;
        for (int m = 0; m < cfg.n_mel_filters; ++m)
            mel[m] = std::log(std::max(mel[m], cfg.log_floor));
        out.row(t) = (dct * mel).transpose();
    }
    require_finite(out, "compute_mfcc output");
    return out;
}

std::pair<Mat, Mat> compute_deltas(const Mat& frames, int halfwidth) {
    if (frames.rows() < 1) throw DataError("compute_deltas: empty input");
    if (halfwidth < 1) throw ConfigError("compute_deltas: halfwidth must be >= 1");
    const int t_max = static_cast<int>(frames.rows()) - 1;
    double denom = 0.0;
    for (int k = 1; k <= halfwidth; ++k) denom += 2.0 * k * k;

    auto apply = [&](const Mat& x) {
        Mat d = Mat::Zero(x.rows(), x.cols());
        for (int t = 0; t <= t_max; ++t) {
            for (int k = 1; k <= halfwidth; ++k) {
                const int fwd = std::min(t + k, t_max);
                const int bwd = std::max(t - k, 0);
                d.row(t) += k * (x.row(fwd) - x.row(bwd));
            }
            d.row(t) /= denom;
        }
        return d;
    };

    Mat delta = apply(frames);
    Mat delta2 = apply(delta);
    return {std::move(delta), std::move(delta2)};
}

Mat compute_features(const AudioBuffer& audio, const DspConfig& cfg) {
    const Mat mfcc = compute_mfcc(audio, cfg);
    auto [delta, delta2] = compute_deltas(mfcc, cfg.delta_halfwidth);
    Mat feats(mfcc.rows(), 3 * mfcc.cols());
    feats << mfcc, delta, delta2;
    return feats;
}

Mat stack_context(const Mat& frames, const ContextConfig& ctx) {
    ctx.validate();
    if (frames.rows() < 1) throw DataError("stack_context: empty input");
    const int w = ctx.window_frames;
    const int half = (w - 1) / 2;
    const int t_max = static_cast<int>(frames.rows()) - 1;
    const int d = static_cast<int>(frames.cols());
    Mat out(frames.rows(), static_cast<Eigen::Index>(d) * w);
    for (int t = 0; t <= t_max; ++t)
        for (int j = -half; j <= half; ++j) {
            const int src = std::clamp(t + j, 0, t_max);
            out.block(t, static_cast<Eigen::Index>(j + half) * d, 1, d) = frames.row(src);
        }
    return out;
}

FeatureStats compute_stats(const Mat& data) {
    std::vector<const Mat*> one{&data};
    return compute_stats(one);
}

FeatureStats compute_stats(const std::vector<const Mat*>& blocks) {
    Eigen::Index dim = -1;
    long long n = 0;
    for (const Mat* b : blocks) {
        if (b->rows() == 0) continue;
        if (dim < 0) dim = b->cols();
        if (b->cols() != dim) throw ShapeError("compute_stats: inconsistent dimensions");
        n += b->rows();
    }
    if (n == 0) throw DataError("compute_stats: no data");

    FeatureStats s;
    s.mean = Vec::Zero(dim);
    s.std = Vec::Zero(dim);
    for (const Mat* b : blocks)
        if (b->rows() > 0) s.mean += b->colwise().sum().transpose();
    s.mean /= static_cast<double>(n);
    for (const Mat* b : blocks)
        for (Eigen::Index r = 0; r < b->rows(); ++r) {
            const Vec d = b->row(r).transpose() - s.mean;
            s.std += d.cwiseProduct(d);
        }
    s.std = (s.std / static_cast<double>(n)).cwiseSqrt();
    return s;
}

void check_stats(const FeatureStats& stats) {
    for (Eigen::Index i = 0; i < stats.std.size(); ++i)
        if (!(stats.std[i] >= 1e-8))
            throw NumericError("degenerate dimension " + std::to_string(i) +
                               ": std = " + std::to_string(stats.std[i]));
}

Mat zscore(const Mat& data, const FeatureStats& stats) {
    if (data.cols() != stats.mean.size())
        throw ShapeError("zscore: dimension mismatch");
    check_stats(stats);
    Mat out = data;
    out.rowwise() -= stats.mean.transpose();
    out.array().rowwise() /= stats.std.transpose().array();
    return out;
}

Mat denormalize(const Mat& data, const FeatureStats& stats) {
    if (data.cols() != stats.mean.size())
        throw ShapeError("denormalize: dimension mismatch");
    Mat out = data;
    out.array().rowwise() *= stats.std.transpose().array();
    out.rowwise() += stats.mean.transpose();
    return out;
}

Vec zscore(const Vec& v, const FeatureStats& stats) {
    if (v.size() != stats.mean.size()) throw ShapeError("zscore: dimension mismatch");
    check_stats(stats);
    return (v - stats.mean).cwiseQuotient(stats.std);
}

Vec denormalize(const Vec& v, const FeatureStats& stats) {
    if (v.size() != stats.mean.size()) throw ShapeError("denormalize: dimension mismatch");
    return v.cwiseProduct(stats.std) + stats.mean;
}

} // namespace aai::dsp
