#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "aai/error.hpp"
#include "aai/tensor.hpp"

namespace aai {

inline constexpr int kContourPoints = 50;
inline constexpr int kContourDim = 2 * kContourPoints; // flattened [x..., y...]
inline constexpr int kImageSize = 136;                 // px, square MRI frame
inline constexpr int kNumPhonemes = 43;

// Millimeters per image pixel. The default follows the observed equivalence
// 2.21 mm = 1.37 px; override when the true field of view is known.
struct PixelScale {
    double mm_per_pixel = 1.6131;

    bool valid() const { return mm_per_pixel > 0.0 && std::isfinite(mm_per_pixel); }
};

double px_to_mm(double v_px, const PixelScale& scale);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Midsagittal tongue contour: 50 ordered points from the tongue root over
// the tip to the sublingual cavity, in pixel coordinates.
struct TongueContour {
    std::array<Point, kContourPoints> points{};
    double timestamp_s = 0.0;

    bool finite() const {
        for (const auto& p : points)
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
        return std::isfinite(timestamp_s);
    }
};

// Layout: [x0..x49, y0..y49]. Keeping the coordinate blocks contiguous makes
// per-dimension statistics over X and Y separable.
Vec flatten_contour(const TongueContour& c);
TongueContour unflatten_contour(const Vec& v, double timestamp_s = 0.0);

// One MFCC analysis frame: 13 static + 13 delta + 13 double-delta values.
struct FeatureFrame {
    std::array<double, 13> mfcc{};
    std::array<double, 13> delta{};
    std::array<double, 13> delta2{};
    double t_s = 0.0;
};

// Index into the 43-symbol phoneme inventory; index 0 by convention is the
// silence symbol "sil" but is_silence is carried explicitly.
struct PhonemeLabel {
    int index = 0;
    bool is_silence = false;
};

struct SegmentInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    PhonemeLabel label;
    bool inter_sentence = false; // silence between utterances (discarded)
};

struct AudioBuffer {
    std::vector<double> samples; // mono, [-1, 1)
    int sample_rate_hz = 16000;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

// One corpus recording: audio plus the time-aligned contour track and the
// phonetic segmentation consumed from input files.
struct Acquisition {
    std::string id;
    AudioBuffer audio;
    std::vector<TongueContour> contours; // strictly increasing timestamps
    std::vector<SegmentInterval> segments; // sorted, non-overlapping

    void validate() const;
};

} // namespace aai
