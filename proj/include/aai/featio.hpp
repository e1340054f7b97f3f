#pragma once

#include <filesystem>

#include "aai/tensor.hpp"

namespace aai {

// AAIF: the binary frame-sequence format shared by feature and target files.
// Header: magic "AAIF", version u32, frame_count u32, dim u32, all
// little-endian, followed by row-major 32-bit floats.
inline constexpr std::uint32_t kFeatFileVersion = 1;

void write_aaif(const std::filesystem::path& path, const Mat& data);
Mat read_aaif(const std::filesystem::path& path);

} // namespace aai
