#include "aai/audio.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace aai {

namespace {

std::uint32_t rd_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t rd_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

void wr_u16(std::ofstream& f, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 2);
}

} // namespace

AudioBuffer read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open WAV file: " + path.string());
    std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
    if (raw.size() < 44 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
        std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
        throw DataError(path.string() + ": not a RIFF/WAVE file");

    AudioBuffer out;
    bool have_fmt = false, have_data = false;
    std::size_t pos = 12;
    while (pos + 8 <= raw.size()) {
        const char* tag = reinterpret_cast<const char*>(raw.data() + pos);
        const std::uint32_t size = rd_u32(raw.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > raw.size())
            throw DataError(path.string() + ": truncated chunk");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) throw DataError(path.string() + ": short fmt chunk");
            const std::uint16_t format = rd_u16(raw.data() + body);
            const std::uint16_t channels = rd_u16(raw.data() + body + 2);
            const std::uint32_t rate = rd_u32(raw.data() + body + 4);
            const std::uint16_t bits = rd_u16(raw.data() + body + 14);
            if (format != 1 || bits != 16)
                throw DataError(path.string() + ": only 16-bit PCM is supported");
            if (channels != 1)
                throw DataError(path.string() + ": only mono audio is supported");
            out.sample_rate_hz = static_cast<int>(rate);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw DataError(path.string() + ": data before fmt chunk");
            const std::size_t n = size / 2;
            out.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const std::int16_t s = static_cast<std::int16_t>(
                    rd_u16(raw.data() + body + 2 * i));
                out.samples[i] = static_cast<double>(s) / 32768.0;
            }
            have_data = true;
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt || !have_data)
        throw DataError(path.string() + ": missing fmt or data chunk");
    return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& audio) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot create WAV file: " + path.string());
    const std::uint32_t n = static_cast<std::uint32_t>(audio.samples.size());
    const std::uint32_t data_bytes = 2 * n;
    const std::uint32_t rate = static_cast<std::uint32_t>(audio.sample_rate_hz);

    f.write("RIFF", 4);
    wr_u32(f, 36 + data_bytes);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    wr_u32(f, 16);
    wr_u16(f, 1);  // PCM
    wr_u16(f, 1);  // mono
    wr_u32(f, rate);
    wr_u32(f, rate * 2); // byte rate
    wr_u16(f, 2);  // block align
    wr_u16(f, 16); // bits per sample
    f.write("data", 4);
    wr_u32(f, data_bytes);
    for (std::uint32_t i = 0; i < n; ++i) {
        double v = std::clamp(audio.samples[i], -1.0, 32767.0 / 32768.0);
        const std::int16_t s = static_cast<std::int16_t>(std::lrint(v * 32768.0));
        wr_u16(f, static_cast<std::uint16_t>(s));
    }
    if (!f) throw DataError("failed writing WAV file: " + path.string());
}

} // namespace aai
