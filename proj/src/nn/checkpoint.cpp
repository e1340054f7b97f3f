#include "aai/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace aai::nn {

namespace {

void wr_u32(std::ofstream& f, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(b), 4);
}

void wr_u64(std::ofstream& f, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(b), 8);
}

void wr_f64(std::ofstream& f, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    wr_u64(f, bits);
}

struct Reader {
    std::ifstream f;
    std::string ctx;

    void bytes(void* dst, std::size_t n) {
        if (!f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n)))
            throw DataError(ctx + ": truncated checkpoint");
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        if (n > 4096) throw DataError(ctx + ": unreasonable string length in checkpoint");
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
};

} // namespace

const Mat& CheckpointData::blob(const std::string& name) const {
    const auto it = blobs.find(name);
    if (it == blobs.end())
        throw DataError("checkpoint: missing parameter '" + name + "'");
    return it->second;
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                     const std::vector<ParamRef>& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot create checkpoint: " + path.string());
    f.write("AAIC", 4);
    wr_u32(f, kCheckpointVersion);
    wr_u32(f, static_cast<std::uint32_t>(header.arch_tag.size()));
    f.write(header.arch_tag.data(), static_cast<std::streamsize>(header.arch_tag.size()));
    wr_u32(f, header.context_frames);
    wr_f64(f, header.alpha);
    wr_u64(f, header.seed);
    wr_u32(f, header.hidden);

    wr_u32(f, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        wr_u32(f, static_cast<std::uint32_t>(p.name.size()));
        f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        wr_u32(f, static_cast<std::uint32_t>(p.rows));
        wr_u32(f, static_cast<std::uint32_t>(p.cols));
    }
    std::vector<float> buf;
    for (const auto& p : params) {
        buf.resize(p.size());
        for (std::size_t i = 0; i < p.size(); ++i)
            buf[i] = static_cast<float>(p.data[i]);
        f.write(reinterpret_cast<const char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
    if (!f) throw DataError("failed writing checkpoint: " + path.string());
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
    Reader r{std::ifstream(path, std::ios::binary), path.string()};
    if (!r.f) throw DataError("cannot open checkpoint: " + path.string());
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, "AAIC", 4) != 0)
        throw DataError(path.string() + ": bad magic, not an AAIC checkpoint");
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw DataError(path.string() + ": unsupported checkpoint version " +
                        std::to_string(version));

    CheckpointData data;
    data.header.arch_tag = r.str();
    data.header.context_frames = r.u32();
    data.header.alpha = r.f64();
    data.header.seed = r.u64();
    data.header.hidden = r.u32();

    const std::uint32_t n_entries = r.u32();
    if (n_entries > 100000) throw DataError(path.string() + ": corrupt shape table");
    std::vector<std::pair<std::string, std::pair<std::uint32_t, std::uint32_t>>> shapes;
    for (std::uint32_t i = 0; i < n_entries; ++i) {
        const std::string name = r.str();
        const std::uint32_t rows = r.u32();
        const std::uint32_t cols = r.u32();
        shapes.emplace_back(name, std::make_pair(rows, cols));
    }
    for (const auto& [name, shape] : shapes) {
        const auto [rows, cols] = shape;
        std::vector<float> buf(static_cast<std::size_t>(rows) * cols);
        r.bytes(buf.data(), buf.size() * sizeof(float));
        Mat m(rows, cols);
        for (std::uint32_t rr = 0; rr < rows; ++rr)
            for (std::uint32_t cc = 0; cc < cols; ++cc)
                m(rr, cc) = static_cast<double>(buf[static_cast<std::size_t>(rr) * cols + cc]);
        if (data.blobs.count(name))
            throw DataError(path.string() + ": duplicate parameter '" + name + "'");
        data.order.push_back(name);
        data.blobs[name] = std::move(m);
    }
    return data;
}

} // namespace aai::nn
