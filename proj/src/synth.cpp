#include "aai/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "aai/audio.hpp"
#include "aai/corpus.hpp"

namespace aai::synth {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTimeQuantum = 0.01; // all segment boundaries on a 10 ms grid

// One latent trajectory: a small sum of low-frequency sinusoids, bounded to
// [-0.9, 0.9] by construction.
struct LatentTrack {
    std::vector<double> amp, freq_hz, phase;
    double offset = 0.0;
    bool frozen = false;
    double frozen_value = 0.0;

    double at(double t) const {
        if (frozen) return frozen_value;
        double v = offset;
        for (std::size_t j = 0; j < amp.size(); ++j)
            v += amp[j] * std::sin(2.0 * kPi * freq_hz[j] * t + phase[j]);
        return v;
    }
};

LatentTrack make_track(Rng& rng, bool frozen) {
    LatentTrack tr;
    tr.frozen = frozen;
    if (frozen) {
        tr.frozen_value = rng.uniform(-0.8, 0.8);
        return tr;
    }
    const int n_components = 4;
    double total = 0.0;
    for (int j = 0; j < n_components; ++j) {
        tr.amp.push_back(rng.uniform(0.3, 1.0));
        tr.freq_hz.push_back(rng.uniform(0.3, 2.8));
        tr.phase.push_back(rng.uniform(0.0, 2.0 * kPi));
        total += tr.amp.back();
    }
    for (auto& a : tr.amp) a *= 0.9 / total;
    return tr;
}

// Quantize the first two latents into a 6 x 7 grid -> classes 1..42
// (class 0 is silence).
int speech_label(double p0, double p1) {
    const int b0 = std::clamp(static_cast<int>(std::floor((p0 + 1.0) / 2.0 * 6.0)), 0, 5);
    const int b1 = std::clamp(static_cast<int>(std::floor((p1 + 1.0) / 2.0 * 7.0)), 0, 6);
    return 1 + b0 * 7 + b1;
}

// Disjoint monotone formant ranges; each latent moves exactly one peak.
double formant_hz(int k, double p) {
    switch (k) {
        case 0: return 500.0 + 200.0 * p;
        case 1: return 1500.0 + 480.0 * p;
        case 2: return 2500.0 + 380.0 * p;
        default: return 3400.0 + 300.0 * p;
    }
}

struct TimelinePiece {
    double start_s, end_s;
    bool speech;
    bool inter; // silence between sentences
};

std::string format_time(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", t);
    return buf;
}

std::string format_coord(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.8f", v);
    return buf;
}

} // namespace

void SynthConfig::validate() const {
    if (n_acquisitions < 1) throw ConfigError("SynthConfig: need at least 1 acquisition");
    if (sentences_per_acquisition < 1)
        throw ConfigError("SynthConfig: need at least 1 sentence per acquisition");
    if (n_latent < 2) throw ConfigError("SynthConfig: need at least 2 latent parameters");
    if (noise_std < 0) throw ConfigError("SynthConfig: noise_std must be >= 0");
    if (sentence_s < 0.2) throw ConfigError("SynthConfig: sentences shorter than 0.2 s");
    if (inter_silence_s < 0.1)
        throw ConfigError("SynthConfig: inter-sentence silence shorter than 0.1 s");
    if (static_cast<int>(deform_amplitude_px.size()) != n_latent)
        throw ConfigError("SynthConfig: deform_amplitude_px size must equal n_latent");
}

Vec default_base_contour() {
    Vec v(kContourDim);
    for (int i = 0; i < kContourPoints; ++i) {
        const double s = static_cast<double>(i) / (kContourPoints - 1);
        v[i] = 100.0 - 65.0 * s;                      // x: root (back) to tip (front)
        v[kContourPoints + i] = 88.0 - 28.0 * std::sin(kPi * s); // y: arched body
    }
    return v;
}

Mat default_deformation_basis() {
    Mat raw = Mat::Zero(4, kContourDim);
    for (int i = 0; i < kContourPoints; ++i) {
        const double s = static_cast<double>(i) / (kContourPoints - 1);
        raw(0, kContourPoints + i) = 1.0;                    // jaw-like vertical shift
        raw(1, i) = 1.0;                                     // front-back shift
        raw(2, kContourPoints + i) = std::sin(kPi * s);      // dorsum height
        const double tip = std::exp(-std::pow((s - 0.85) / 0.12, 2.0));
        raw(3, kContourPoints + i) = tip;                    // tip raising
        raw(3, i) = -0.4 * tip;
    }
    // Gram-Schmidt, unit rows.
    Mat basis = raw;
    for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < k; ++j)
            basis.row(k) -= basis.row(k).dot(basis.row(j)) * basis.row(j);
        basis.row(k) /= basis.row(k).norm();
    }
    return basis;
}

void generate(const SynthConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    const Vec base = cfg.base_contour.size() ? cfg.base_contour : default_base_contour();
    if (base.size() != kContourDim)
        throw ConfigError("SynthConfig: base_contour must have 100 values");
    Mat basis = cfg.deformation_basis.rows() ? cfg.deformation_basis
                                             : default_deformation_basis();
    if (basis.rows() != cfg.n_latent || basis.cols() != kContourDim)
        throw ConfigError("SynthConfig: deformation_basis must be n_latent x 100");
    for (int a = 0; a < cfg.n_latent; ++a)
        for (int b = a + 1; b < cfg.n_latent; ++b)
            if (std::abs(basis.row(a).dot(basis.row(b))) >
                1e-6 * basis.row(a).norm() * basis.row(b).norm())
                throw ConfigError("SynthConfig: deformation basis rows are not orthogonal");
    // Scale unit rows to their pixel amplitudes.
    for (int k = 0; k < cfg.n_latent; ++k) {
        const double maxabs = basis.row(k).cwiseAbs().maxCoeff();
        if (maxabs <= 0) throw ConfigError("SynthConfig: zero deformation basis row");
        basis.row(k) *= cfg.deform_amplitude_px[static_cast<std::size_t>(k)] / maxabs;
    }

    fs::create_directories(out_dir);
    {
        std::ofstream f(out_dir / "phonemes.txt");
        if (!f) throw DataError("cannot create " + (out_dir / "phonemes.txt").string());
        f << corpus::kSilenceSymbol << "\n";
        for (int i = 1; i < kNumPhonemes; ++i) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "ph%02d", i);
            f << buf << "\n";
        }
    }

    const int sr = 16000;
    long long clipped_frames = 0;
    long long total_contour_frames = 0;

    for (int a = 0; a < cfg.n_acquisitions; ++a) {
        char name[16];
        std::snprintf(name, sizeof(name), "acq%03d", a);
        const fs::path dir = out_dir / name;
        fs::create_directories(dir);

        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(a)));

        std::vector<LatentTrack> latents;
        for (int k = 0; k < cfg.n_latent; ++k)
            latents.push_back(make_track(rng, cfg.freeze_latents));
        auto latent_at = [&](double t) {
            Vec p(cfg.n_latent);
            for (int k = 0; k < cfg.n_latent; ++k) p[k] = latents[static_cast<std::size_t>(k)].at(t);
            return p;
        };

        // Timeline: silence | sentence [with optional intra pause] | silence | ...
        std::vector<TimelinePiece> pieces;
        double t = 0.0;
        auto push = [&](double len, bool speech, bool inter) {
            pieces.push_back({t, t + len, speech, inter});
            t += len;
        };
        push(cfg.inter_silence_s, false, true);
        for (int sidx = 0; sidx < cfg.sentences_per_acquisition; ++sidx) {
            if (sidx % 3 == 1 && cfg.intra_silence_s > 0) {
                const double half = std::round(cfg.sentence_s / 2.0 / kTimeQuantum) * kTimeQuantum;
                push(half, true, false);
                push(cfg.intra_silence_s, false, false);
                push(cfg.sentence_s - half, true, false);
            } else {
                push(cfg.sentence_s, true, false);
            }
            push(cfg.inter_silence_s, false, true);
        }
        const double duration = t;
        const int n_samples = static_cast<int>(std::llround(duration * sr));

        auto in_speech = [&](double at) {
            for (const auto& p : pieces)
                if (at >= p.start_s && at < p.end_s) return p.speech;
            return false;
        };

        // --- audio: harmonics of f0 shaped by p-driven spectral peaks -------
        const int n_harm = static_cast<int>(std::floor((sr / 2.0 - 200.0) / cfg.f0_hz));
        std::vector<double> phase(static_cast<std::size_t>(n_harm));
        for (int h = 0; h < n_harm; ++h) phase[static_cast<std::size_t>(h)] = rng.uniform(0.0, 2.0 * kPi);

        const int block = 80; // amplitude update every 5 ms
        const double sigma = 140.0;
        std::vector<double> amp_cur(static_cast<std::size_t>(n_harm), 0.0);
        std::vector<double> amp_next(static_cast<std::size_t>(n_harm), 0.0);
        auto envelope_at = [&](double at, std::vector<double>& amp) {
            const Vec p = latent_at(at);
            const bool speech = in_speech(at);
            for (int h = 0; h < n_harm; ++h) {
                const double f = (h + 1) * cfg.f0_hz;
                double e = 0.0;
                if (speech) {
                    const int n_peaks = std::min(cfg.n_latent, 4);
                    for (int k = 0; k < n_peaks; ++k) {
                        const double d = f - formant_hz(k, p[k]);
                        e += std::exp(-d * d / (2.0 * sigma * sigma));
                    }
                }
                amp[static_cast<std::size_t>(h)] = e;
            }
        };

        AudioBuffer audio;
        audio.sample_rate_hz = sr;
        audio.samples.resize(static_cast<std::size_t>(n_samples), 0.0);
        envelope_at(0.0, amp_cur);
        for (int n0 = 0; n0 < n_samples; n0 += block) {
            const int n1 = std::min(n0 + block, n_samples);
            envelope_at(static_cast<double>(n1) / sr, amp_next);
            for (int n = n0; n < n1; ++n) {
                const double lam = static_cast<double>(n - n0) / block;
                double s = 0.0;
                for (int h = 0; h < n_harm; ++h) {
                    const std::size_t hi = static_cast<std::size_t>(h);
                    const double aenv = (1.0 - lam) * amp_cur[hi] + lam * amp_next[hi];
                    if (aenv > 1e-6)
                        s += aenv * std::sin(2.0 * kPi * (h + 1) * cfg.f0_hz * n / sr + phase[hi]);
                }
                audio.samples[static_cast<std::size_t>(n)] = cfg.audio_gain * s;
            }
            std::swap(amp_cur, amp_next);
        }
        if (cfg.noise_std > 0)
            for (auto& s : audio.samples) s += cfg.noise_std * rng.gaussian();
        write_wav(dir / "audio.wav", audio);

        // --- contours at 50 fps (frame centers every 20 ms) -----------------
        {
            std::ofstream f(dir / "contours.csv");
            if (!f) throw DataError("cannot create " + (dir / "contours.csv").string());
            for (int ci = 0;; ++ci) {
                const double tc = 0.01 + 0.02 * ci;
                if (tc > duration - 0.01 + 1e-9) break;
                const Vec p = latent_at(tc);
                Vec c = base + basis.transpose() * p;
                ++total_contour_frames;
                bool clipped = false;
                for (Eigen::Index i = 0; i < c.size(); ++i) {
                    if (c[i] < 0.0 || c[i] > kImageSize) clipped = true;
                    c[i] = std::clamp(c[i], 0.0, static_cast<double>(kImageSize));
                }
                if (clipped) ++clipped_frames;
                f << format_time(tc);
                for (Eigen::Index i = 0; i < c.size(); ++i) f << ',' << format_coord(c[i]);
                f << "\n";
            }
        }

        // --- segments: quantized latents during speech, sil elsewhere -------
        {
            std::ofstream f(dir / "segments.csv");
            if (!f) throw DataError("cannot create " + (dir / "segments.csv").string());
            const double step = 0.005;
            const int n_steps = static_cast<int>(std::llround(duration / step));
            auto label_at = [&](double at) -> std::pair<int, bool> {
                for (const auto& piece : pieces)
                    if (at >= piece.start_s && at < piece.end_s) {
                        if (!piece.speech) return {0, piece.inter};
                        const Vec p = latent_at(at);
                        return {speech_label(p[0], p[1]), false};
                    }
                return {0, true};
            };
            int run_label = -1;
            bool run_inter = false;
            double run_start = 0.0;
            auto emit = [&](double end) {
                if (run_label < 0) return;
                std::string symbol;
                if (run_label == 0) {
                    symbol = corpus::kSilenceSymbol;
                } else {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "ph%02d", run_label);
                    symbol = buf;
                }
                f << format_time(run_start) << ',' << format_time(end) << ',' << symbol
                  << ',' << (run_inter ? 1 : 0) << "\n";
            };
            for (int i = 0; i < n_steps; ++i) {
                const double mid = (i + 0.5) * step;
                const auto [lab, inter] = label_at(mid);
                if (lab != run_label || inter != run_inter) {
                    emit(i * step);
                    run_label = lab;
                    run_inter = inter;
                    run_start = i * step;
                }
            }
            emit(duration);
        }
    }

    if (clipped_frames * 100 > total_contour_frames)
        throw ConfigError("synth: contour clipping on >1% of frames (" +
                          std::to_string(clipped_frames) + "/" +
                          std::to_string(total_contour_frames) +
                          "); deformation basis too large");
}

} // namespace aai::synth
