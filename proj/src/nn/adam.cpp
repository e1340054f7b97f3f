#include "aai/nn/adam.hpp"

#include <cmath>

namespace aai::nn {

void zero_all(const std::vector<ParamRef>& refs) {
    for (const auto& r : refs)
        Eigen::Map<Vec>(r.data, static_cast<Eigen::Index>(r.size())).setZero();
}

void add_all(const std::vector<ParamRef>& dst, const std::vector<ParamRef>& src) {
    if (dst.size() != src.size()) throw ShapeError("add_all: ref list size mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].size() != src[i].size()) throw ShapeError("add_all: tensor size mismatch");
        Eigen::Map<Vec>(dst[i].data, static_cast<Eigen::Index>(dst[i].size())) +=
            Eigen::Map<const Vec>(src[i].data, static_cast<Eigen::Index>(src[i].size()));
    }
}

double global_norm(const std::vector<ParamRef>& refs) {
    double sq = 0.0;
    for (const auto& r : refs)
        sq += Eigen::Map<const Vec>(r.data, static_cast<Eigen::Index>(r.size())).squaredNorm();
    return std::sqrt(sq);
}

void scale_all(const std::vector<ParamRef>& refs, double factor) {
    for (const auto& r : refs)
        Eigen::Map<Vec>(r.data, static_cast<Eigen::Index>(r.size())) *= factor;
}

double clip_global_norm(const std::vector<ParamRef>& grads, double max_norm) {
    const double norm = global_norm(grads);
    if (std::isfinite(norm) && norm > max_norm && norm > 0.0)
        scale_all(grads, max_norm / norm);
    return norm;
}

Adam::Adam(const std::vector<ParamRef>& params, const AdamConfig& cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.push_back(Vec::Zero(static_cast<Eigen::Index>(p.size())));
        v_.push_back(Vec::Zero(static_cast<Eigen::Index>(p.size())));
    }
}

void Adam::step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw ShapeError("Adam::step: parameter list does not match optimizer state");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto n = static_cast<Eigen::Index>(params[i].size());
        if (grads[i].size() != params[i].size() || m_[i].size() != n)
            throw ShapeError("Adam::step: tensor shape mismatch at " + params[i].name);
        Eigen::Map<Vec> p(params[i].data, n);
        Eigen::Map<const Vec> g(grads[i].data, n);
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i].array() + (1.0 - cfg_.beta2) * g.array().square();
        p.array() -= cfg_.lr * (m_[i].array() / bc1) /
                     ((v_[i].array() / bc2).sqrt() + cfg_.eps);
    }
}

} // namespace aai::nn
