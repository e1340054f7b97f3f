#include "aai/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace aai::eval {

using nlohmann::json;

double frame_rmse(const TongueContour& pred, const TongueContour& truth,
                  const PixelScale& scale) {
    if (!scale.valid()) throw ConfigError("frame_rmse: invalid pixel scale");
    double sq = 0.0;
    for (int i = 0; i < kContourPoints; ++i) {
        const double dx = pred.points[i].x - truth.points[i].x;
        const double dy = pred.points[i].y - truth.points[i].y;
        sq += dx * dx + dy * dy;
    }
    const double rmse_px = std::sqrt(sq / kContourDim);
    return px_to_mm(rmse_px, scale);
}

double frame_point_distance(const TongueContour& pred, const TongueContour& truth,
                            const PixelScale& scale) {
    if (!scale.valid()) throw ConfigError("frame_point_distance: invalid pixel scale");
    double total = 0.0;
    for (int i = 0; i < kContourPoints; ++i) {
        const double dx = pred.points[i].x - truth.points[i].x;
        const double dy = pred.points[i].y - truth.points[i].y;
        total += std::sqrt(dx * dx + dy * dy);
    }
    return px_to_mm(total / kContourPoints, scale);
}

Summary summarize(const std::vector<double>& per_frame) {
    if (per_frame.empty()) throw DataError("summarize: empty per-frame list");
    Summary s;
    double sum = 0.0;
    for (double v : per_frame) sum += v;
    s.mean = sum / static_cast<double>(per_frame.size());
    double sq = 0.0;
    for (double v : per_frame) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(per_frame.size()));

    std::vector<double> sorted = per_frame;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    s.median = (n % 2 == 1) ? sorted[n / 2]
                            : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return s;
}

double phoneme_accuracy(const Mat& posteriors, const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != posteriors.rows())
        throw ShapeError("phoneme_accuracy: frame counts do not match");
    if (posteriors.rows() == 0) throw DataError("phoneme_accuracy: empty input");
    long long hits = 0;
    for (Eigen::Index r = 0; r < posteriors.rows(); ++r) {
        Eigen::Index best = 0;
        posteriors.row(r).maxCoeff(&best);
        if (static_cast<int>(best) == labels[static_cast<std::size_t>(r)]) ++hits;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(posteriors.rows());
}

void write_report_json(const std::filesystem::path& path, const EvalReport& report) {
    json j;
    j["split"] = report.split;
    j["metric"] = report.metric;
    j["mm_per_pixel"] = report.mm_per_pixel;
    j["frames"] = report.frames.size();
    j["sentences"] = report.sentences;
    j["rmse_mm"] = {{"mean", report.summary.mean},
                    {"std", report.summary.std},
                    {"median", report.summary.median}};
    if (report.accuracy_pct) j["phoneme_accuracy_pct"] = *report.accuracy_pct;
    if (report.mean_cross_entropy) j["mean_cross_entropy"] = *report.mean_cross_entropy;
    std::ofstream f(path);
    if (!f) throw DataError("cannot create " + path.string());
    f << j.dump(2) << "\n";
    if (!f) throw DataError("failed writing " + path.string());
}

void write_frames_csv(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot create " + path.string());
    const bool with_labels = report.accuracy_pct.has_value();
    f << "sentence,frame,t_s,rmse_mm";
    if (with_labels) f << ",label,predicted";
    f << "\n";
    char buf[64];
    for (const auto& r : report.frames) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.9f", r.t_s, r.rmse_mm);
        f << r.sentence_id << ',' << r.frame << ',' << buf;
        if (with_labels) f << ',' << r.label << ',' << r.predicted;
        f << "\n";
    }
    if (!f) throw DataError("failed writing " + path.string());
}

namespace {

constexpr double kSvgScale = 3.0;
constexpr double kPanelPad = 12.0;

std::string polyline_points(const TongueContour& c, double x_off) {
    std::string pts;
    char buf[64];
    for (const auto& p : c.points) {
        std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x_off + p.x * kSvgScale,
                      p.y * kSvgScale);
        pts += buf;
    }
    return pts;
}

} // namespace

void write_overlay_svg(const std::filesystem::path& path,
                       const std::vector<TongueContour>& truth,
                       const std::vector<TongueContour>& pred,
                       const std::vector<int>& frame_indices,
                       const PixelScale& scale) {
    if (truth.size() != pred.size())
        throw ShapeError("write_overlay_svg: contour count mismatch");
    const double panel = kImageSize * kSvgScale + kPanelPad;
    const double width = panel * static_cast<double>(frame_indices.size()) + kPanelPad;
    const double height = kImageSize * kSvgScale + 40.0;

    std::ofstream f(path);
    if (!f) throw DataError("cannot create " + path.string());
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\">\n";
    f << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    double x_off = kPanelPad;
    char buf[128];
    for (int idx : frame_indices) {
        if (idx < 0 || idx >= static_cast<int>(truth.size()))
            throw DataError("write_overlay_svg: frame index " + std::to_string(idx) +
                            " out of range");
        f << "  <rect x=\"" << x_off << "\" y=\"0\" width=\"" << kImageSize * kSvgScale
          << "\" height=\"" << kImageSize * kSvgScale
          << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
        f << "  <polyline fill=\"none\" stroke=\"#1f4fd0\" stroke-width=\"1.5\" points=\""
          << polyline_points(truth[static_cast<std::size_t>(idx)], x_off) << "\"/>\n";
        f << "  <polyline fill=\"none\" stroke=\"#d02020\" stroke-width=\"1.5\" "
             "stroke-dasharray=\"6 4\" points=\""
          << polyline_points(pred[static_cast<std::size_t>(idx)], x_off) << "\"/>\n";
        const double mm = frame_rmse(pred[static_cast<std::size_t>(idx)],
                                     truth[static_cast<std::size_t>(idx)], scale);
        std::snprintf(buf, sizeof(buf), "frame %d: RMSE %.2f mm", idx, mm);
        f << "  <text x=\"" << x_off << "\" y=\"" << kImageSize * kSvgScale + 24.0
          << "\" font-family=\"sans-serif\" font-size=\"14\">" << buf << "</text>\n";
        x_off += panel;
    }
    f << "</svg>\n";
    if (!f) throw DataError("failed writing " + path.string());
}

void write_overlay_csv(const std::filesystem::path& path,
                       const std::vector<TongueContour>& truth,
                       const std::vector<TongueContour>& pred,
                       const std::vector<int>& frame_indices) {
    if (truth.size() != pred.size())
        throw ShapeError("write_overlay_csv: contour count mismatch");
    std::ofstream f(path);
    if (!f) throw DataError("cannot create " + path.string());
    f << "frame,point,truth_x,truth_y,pred_x,pred_y\n";
    char buf[128];
    for (int idx : frame_indices) {
        if (idx < 0 || idx >= static_cast<int>(truth.size()))
            throw DataError("write_overlay_csv: frame index out of range");
        const auto& t = truth[static_cast<std::size_t>(idx)];
        const auto& p = pred[static_cast<std::size_t>(idx)];
        for (int i = 0; i < kContourPoints; ++i) {
            std::snprintf(buf, sizeof(buf), "%d,%d,%.9f,%.9f,%.9f,%.9f\n", idx, i,
                          t.points[i].x, t.points[i].y, p.points[i].x, p.points[i].y);
            f << buf;
        }
    }
    if (!f) throw DataError("failed writing " + path.string());
}

} // namespace aai::eval
