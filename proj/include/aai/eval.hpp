#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aai/tensor.hpp"
#include "aai/types.hpp"

namespace aai::eval {

// Frame-level RMSE over the 100 flattened coordinates, in millimeters.
// Computed on denormalized pixel coordinates, then scaled.
double frame_rmse(const TongueContour& pred, const TongueContour& truth,
                  const PixelScale& scale);

// Alternative metric: mean Euclidean distance between corresponding points.
double frame_point_distance(const TongueContour& pred, const TongueContour& truth,
                            const PixelScale& scale);

struct Summary {
    double mean = 0.0;
    double std = 0.0;   // population std
    double median = 0.0; // midpoint convention for even counts
};

Summary summarize(const std::vector<double>& per_frame);

// 100 * fraction of frames whose argmax posterior equals the label.
// Ties break toward the lowest index.
double phoneme_accuracy(const Mat& posteriors, const std::vector<int>& labels);

struct FrameRecord {
    std::string sentence_id;
    int frame = 0;
    double t_s = 0.0;
    double rmse_mm = 0.0;
    int label = -1;    // -1 when unavailable
    int predicted = -1;
};

struct EvalReport {
    std::string split;
    std::string metric = "frame_rmse"; // or "point_distance"
    double mm_per_pixel = 0.0;
    std::vector<FrameRecord> frames;
    Summary summary;
    std::optional<double> accuracy_pct; // MT variants only
    std::optional<double> mean_cross_entropy;
    int sentences = 0;
};

void write_report_json(const std::filesystem::path& path, const EvalReport& report);
void write_frames_csv(const std::filesystem::path& path, const EvalReport& report);

// Side-by-side contour overlays for selected frames: ground truth solid,
// prediction dashed, per-frame RMSE annotated.
void write_overlay_svg(const std::filesystem::path& path,
                       const std::vector<TongueContour>& truth,
                       const std::vector<TongueContour>& pred,
                       const std::vector<int>& frame_indices,
                       const PixelScale& scale);

void write_overlay_csv(const std::filesystem::path& path,
                       const std::vector<TongueContour>& truth,
                       const std::vector<TongueContour>& pred,
                       const std::vector<int>& frame_indices);

} // namespace aai::eval
