#include "aai/nn/loss.hpp"

#include <cmath>

#include "aai/nn/layers.hpp"

namespace aai::nn {

namespace {

void check_same_shape(const Mat& y, const Mat& yhat, const char* who) {
    if (y.rows() != yhat.rows() || y.cols() != yhat.cols())
        throw ShapeError(std::string(who) + ": shape mismatch (" + std::to_string(y.rows()) +
                         "x" + std::to_string(y.cols()) + " vs " + std::to_string(yhat.rows()) +
                         "x" + std::to_string(yhat.cols()) + ")");
}

void check_labels(const Mat& m, const std::vector<int>& labels, const char* who) {
    if (static_cast<Eigen::Index>(labels.size()) != m.rows())
        throw ShapeError(std::string(who) + ": one label per row required");
    for (int l : labels)
        if (l < 0 || l >= m.cols())
            throw DataError(std::string(who) + ": label index " + std::to_string(l) +
                            " outside [0, " + std::to_string(m.cols()) + ")");
}

} // namespace

double mse(const Mat& y, const Mat& yhat) {
    check_same_shape(y, yhat, "mse");
    if (y.size() == 0) throw DataError("mse: empty input");
    return (y - yhat).squaredNorm() / static_cast<double>(y.size());
}

Mat mse_grad(const Mat& y, const Mat& yhat) {
    check_same_shape(y, yhat, "mse_grad");
    return 2.0 / static_cast<double>(y.size()) * (yhat - y);
}

double mse_masked(const Mat& y, const Mat& yhat, const std::vector<std::uint8_t>& mask) {
    check_same_shape(y, yhat, "mse_masked");
    if (static_cast<Eigen::Index>(mask.size()) != y.rows())
        throw ShapeError("mse_masked: one mask entry per row required");
    double sse = 0.0;
    long long rows = 0;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
        if (!mask[static_cast<std::size_t>(r)]) continue;
        sse += (y.row(r) - yhat.row(r)).squaredNorm();
        ++rows;
    }
    if (rows == 0) throw DataError("mse_masked: all rows masked out");
    return sse / (static_cast<double>(rows) * static_cast<double>(y.cols()));
}

double cross_entropy(const Mat& probs, const std::vector<int>& labels) {
    check_labels(probs, labels, "cross_entropy");
    if (probs.rows() == 0) throw DataError("cross_entropy: empty input");
    double total = 0.0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        const double sum = probs.row(r).sum();
        if (std::abs(sum - 1.0) > 1e-6)
            throw DataError("cross_entropy: row " + std::to_string(r) +
                            " is not a distribution (sum = " + std::to_string(sum) + ")");
        const double p = probs(r, labels[static_cast<std::size_t>(r)]);
        total -= std::log(std::max(p, 1e-300));
    }
    return total / static_cast<double>(probs.rows());
}

double cross_entropy_masked(const Mat& probs, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask) {
    check_labels(probs, labels, "cross_entropy_masked");
    if (static_cast<Eigen::Index>(mask.size()) != probs.rows())
        throw ShapeError("cross_entropy_masked: one mask entry per row required");
    double total = 0.0;
    long long rows = 0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r) {
        if (!mask[static_cast<std::size_t>(r)]) continue;
        const double p = probs(r, labels[static_cast<std::size_t>(r)]);
        total -= std::log(std::max(p, 1e-300));
        ++rows;
    }
    if (rows == 0) throw DataError("cross_entropy_masked: all rows masked out");
    return total / static_cast<double>(rows);
}

double softmax_cross_entropy(const Mat& logits, const std::vector<int>& labels,
                             Mat* dlogits) {
    check_labels(logits, labels, "softmax_cross_entropy");
    if (logits.rows() == 0) throw DataError("softmax_cross_entropy: empty input");
    const Mat logp = log_softmax_rows(logits);
    double total = 0.0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r)
        total -= logp(r, labels[static_cast<std::size_t>(r)]);
    const double n = static_cast<double>(logits.rows());
    if (dlogits) {
        *dlogits = logp.array().exp();
        for (Eigen::Index r = 0; r < logits.rows(); ++r)
            (*dlogits)(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
        *dlogits /= n;
    }
    return total / n;
}

double combined_loss(double mse_term, double ce_term, double alpha) {
    require_finite(mse_term, "combined_loss: MSE term");
    require_finite(ce_term, "combined_loss: cross-entropy term");
    if (alpha < 0) throw ConfigError("combined_loss: alpha must be >= 0");
    return mse_term + alpha * ce_term;
}

} // namespace aai::nn
