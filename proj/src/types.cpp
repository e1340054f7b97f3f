#include "aai/types.hpp"

#include <cmath>

namespace aai {

double px_to_mm(double v_px, const PixelScale& scale) {
    if (!scale.valid())
        throw ConfigError("PixelScale: mm_per_pixel must be positive and finite");
    if (!std::isfinite(v_px))
        throw NumericError("px_to_mm: non-finite input length");
    return v_px * scale.mm_per_pixel;
}

Vec flatten_contour(const TongueContour& c) {
    Vec v(kContourDim);
    for (int i = 0; i < kContourPoints; ++i) {
        v[i] = c.points[i].x;
        v[kContourPoints + i] = c.points[i].y;
    }
    return v;
}

TongueContour unflatten_contour(const Vec& v, double timestamp_s) {
    if (v.size() != kContourDim)
        throw ShapeError("unflatten_contour: expected " + std::to_string(kContourDim) +
                         " values, got " + std::to_string(v.size()));
    TongueContour c;
    c.timestamp_s = timestamp_s;
    for (int i = 0; i < kContourPoints; ++i) {
        c.points[i].x = v[i];
        c.points[i].y = v[kContourPoints + i];
    }
    return c;
}

void Acquisition::validate() const {
    if (id.empty()) throw DataError("Acquisition: empty id");
    if (audio.sample_rate_hz <= 0) throw DataError(id + ": bad sample rate");
    for (const auto& c : contours)
        if (!c.finite()) throw DataError(id + ": non-finite contour data");
    for (std::size_t i = 1; i < contours.size(); ++i)
        if (contours[i].timestamp_s <= contours[i - 1].timestamp_s)
            throw DataError(id + ": contour timestamps not strictly increasing");
    const double dur = audio.duration_s();
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const auto& s = segments[i];
        if (!(s.start_s < s.end_s))
            throw DataError(id + ": segment with start >= end");
        if (s.label.index < 0 || s.label.index >= kNumPhonemes)
            throw DataError(id + ": phoneme index out of range");
        if (i > 0 && s.start_s < segments[i - 1].end_s - 1e-9)
            throw DataError(id + ": overlapping segments");
        if (s.end_s > dur + 1e-6)
            throw DataError(id + ": segment extends past audio end");
    }
}

} // namespace aai
