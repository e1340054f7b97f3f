#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aai/tensor.hpp"

namespace aai::nn {

// Flat view of one parameter (or gradient) tensor. rows/cols describe the
// logical shape for checkpointing; data is rows*cols doubles.
struct ParamRef {
    std::string name;
    double* data = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

void zero_all(const std::vector<ParamRef>& refs);
void add_all(const std::vector<ParamRef>& dst, const std::vector<ParamRef>& src);
double global_norm(const std::vector<ParamRef>& refs);
void scale_all(const std::vector<ParamRef>& refs, double factor);

// Clips to max_norm in place; returns the pre-clip norm.
double clip_global_norm(const std::vector<ParamRef>& grads, double max_norm);

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list.
class Adam {
public:
    Adam(const std::vector<ParamRef>& params, const AdamConfig& cfg = {});

    // params must match the construction list element-for-element.
    void step(const std::vector<ParamRef>& params, const std::vector<ParamRef>& grads);

    std::int64_t steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<Vec> m_, v_;
    std::int64_t t_ = 0;
};

} // namespace aai::nn
