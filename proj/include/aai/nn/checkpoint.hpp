#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "aai/nn/adam.hpp"
#include "aai/tensor.hpp"

namespace aai::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// AAIC file header. Parameters follow as a shape table plus little-endian
// 32-bit float blobs in declaration order.
struct CheckpointHeader {
    std::string arch_tag;  // "ST", "MT", "ST-AE", "MT-AE", "AE16"
    std::uint32_t context_frames = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t hidden = 0;
};

struct CheckpointData {
    CheckpointHeader header;
    std::vector<std::string> order;   // declaration order of the shape table
    std::map<std::string, Mat> blobs; // values promoted to doubles

    const Mat& blob(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                     const std::vector<ParamRef>& params);

// Validates magic, version and the shape table; a truncated or inconsistent
// file throws DataError without producing a partial result.
CheckpointData load_checkpoint(const std::filesystem::path& path);

} // namespace aai::nn
