#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aai/dsp.hpp"
#include "aai/tensor.hpp"
#include "aai/types.hpp"

namespace aai::corpus {

inline constexpr const char* kSilenceSymbol = "sil";

// An acquisition resampled onto the 10 ms feature grid, before silence
// filtering and normalization.
struct AlignedAcquisition {
    std::string id;
    Mat features;                 // T x 39, raw
    Mat contours;                 // T x 100, raw pixel coordinates
    std::vector<PhonemeLabel> labels;
    std::vector<std::uint8_t> inter_silence; // frame lies in an inter-sentence gap
    std::vector<double> times_s;
    int dropped_outside_span = 0; // grid frames without a bracketing contour
};

// Maximal run of frames between two inter-sentence silences.
struct RawSentence {
    std::string id;
    std::string acquisition_id;
    double t0_s = 0.0;
    Mat features; // T x 39, raw
    Mat contours; // T x 100, raw pixel coordinates
    std::vector<PhonemeLabel> labels;
};

struct NormStats {
    dsp::FeatureStats features;                          // global over training split
    std::map<std::string, dsp::FeatureStats> contours;   // per acquisition (+/-30 window)
};

struct SplitManifest {
    std::uint64_t seed = 0;
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
};

// Pointwise linear interpolation of the contour track onto grid timestamps.
// Every grid time must lie inside [first, last] contour timestamp.
std::vector<TongueContour> interpolate_contours(const std::vector<TongueContour>& contours,
                                                const std::vector<double>& grid_s);

// Feature extraction + grid alignment + phoneme labeling for one recording.
// Grid frames outside the contour time span are dropped and counted; a kept
// frame not covered by any segment interval is a coverage error.
AlignedAcquisition align_acquisition(const Acquisition& acq, const dsp::DspConfig& cfg);

// Drops frames lying in inter-sentence silence intervals and cuts the rest
// into time-contiguous sentences. Intra-sentence silences survive.
std::vector<RawSentence> filter_silences(const AlignedAcquisition& aligned);

// Contour statistics over acquisitions [index-30, index+30], clamped to the
// corpus range. `contour_blocks` holds each acquisition's raw contours
// flattened to rows, in recording order.
dsp::FeatureStats contour_norm_stats(const std::vector<Mat>& contour_blocks,
                                     std::size_t index, int halfwindow = 30);

// Deterministic 80/10/10 split by acquisition. Validation and test each get
// round(n/10) acquisitions; the remainder trains.
SplitManifest make_split(const std::vector<std::string>& ids, std::uint64_t seed);

// ---- corpus directory ingestion ------------------------------------------

std::vector<std::string> load_phoneme_inventory(const std::filesystem::path& corpus_dir);

Acquisition load_acquisition(const std::filesystem::path& corpus_dir,
                             const std::string& id,
                             const std::vector<std::string>& phoneme_symbols);

std::vector<std::string> list_acquisition_ids(const std::filesystem::path& corpus_dir);

// ---- prepared dataset ------------------------------------------------------

struct PrepConfig {
    int context_frames = 11;
    std::uint64_t seed = 1;
    dsp::DspConfig dsp;
};

struct PrepSummary {
    int acquisitions = 0;
    int sentences = 0;
    long long frames_kept = 0;
    long long frames_dropped_outside_span = 0;
    long long frames_dropped_inter_silence = 0;
    int train_acquisitions = 0;
    int validation_acquisitions = 0;
    int test_acquisitions = 0;
};

// Runs the whole preprocessing chain and writes the prepared dataset:
// sentences/<id>.{feat,cont,phn} (AAIF), split.json, norm_stats.json and
// dataset.json. Deterministic for a fixed seed.
PrepSummary prepare_dataset(const std::filesystem::path& corpus_dir,
                            const std::filesystem::path& out_dir,
                            const PrepConfig& cfg);

struct PreparedSentence {
    std::string id;
    std::string acquisition_id;
    std::string split; // train / validation / test
    double t0_s = 0.0;
    Mat features;              // T x 39W, normalized + context-stacked
    Mat contours;              // T x 100, normalized
    std::vector<int> phonemes; // class indices
};

struct Dataset {
    int context_frames = 0;
    int feature_dim = 0;
    int base_dim = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> phoneme_symbols;
    NormStats stats;
    SplitManifest split;
    std::vector<PreparedSentence> sentences;

    std::vector<const PreparedSentence*> split_sentences(const std::string& split_name) const;
    const dsp::FeatureStats& contour_stats_for(const std::string& acquisition_id) const;
};

Dataset load_dataset(const std::filesystem::path& prep_dir);

// FNV-1a over a byte string; used to tie dataset.json to norm_stats.json.
std::uint64_t fnv1a(const std::string& bytes);

} // namespace aai::corpus
