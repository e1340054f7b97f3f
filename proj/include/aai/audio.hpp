#pragma once

#include <filesystem>

#include "aai/types.hpp"

namespace aai {

// Mono 16-bit signed little-endian PCM only; anything else is rejected.
AudioBuffer read_wav(const std::filesystem::path& path);

// Samples are clamped to [-1, 1) and quantized to 16-bit.
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

} // namespace aai
