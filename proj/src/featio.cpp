#include "aai/featio.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace aai {

namespace {

void wr_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    f.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t rd_u32(std::ifstream& f, const std::string& ctx) {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
        throw DataError(ctx + ": truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

} // namespace

void write_aaif(const std::filesystem::path& path, const Mat& data) {
    require_finite(data, "AAIF payload");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot create feature file: " + path.string());
    f.write("AAIF", 4);
    wr_u32(f, kFeatFileVersion);
    wr_u32(f, static_cast<std::uint32_t>(data.rows()));
    wr_u32(f, static_cast<std::uint32_t>(data.cols()));
    std::vector<float> row(static_cast<std::size_t>(data.cols()));
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.cols(); ++c)
            row[static_cast<std::size_t>(c)] = static_cast<float>(data(r, c));
        f.write(reinterpret_cast<const char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
    if (!f) throw DataError("failed writing feature file: " + path.string());
}

Mat read_aaif(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open feature file: " + path.string());
    char magic[4];
    if (!f.read(magic, 4) || std::memcmp(magic, "AAIF", 4) != 0)
        throw DataError(path.string() + ": bad magic, not an AAIF file");
    const std::uint32_t version = rd_u32(f, path.string());
    if (version != kFeatFileVersion)
        throw DataError(path.string() + ": unsupported AAIF version " +
                        std::to_string(version));
    const std::uint32_t rows = rd_u32(f, path.string());
    const std::uint32_t cols = rd_u32(f, path.string());
    if (cols == 0) throw DataError(path.string() + ": zero dimension");

    Mat out(rows, cols);
    std::vector<float> row(cols);
    for (std::uint32_t r = 0; r < rows; ++r) {
        if (!f.read(reinterpret_cast<char*>(row.data()),
                    static_cast<std::streamsize>(cols * sizeof(float))))
            throw DataError(path.string() + ": truncated payload");
        for (std::uint32_t c = 0; c < cols; ++c)
            out(r, c) = static_cast<double>(row[c]);
    }
    return out;
}

} // namespace aai
