#include "camflow/flowio.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "camflow/errors.hpp"

namespace camflow {

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'F', 'L', 'O'};

void put_u32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                           static_cast<char>((v >> 16) & 0xFF),
                           static_cast<char>((v >> 24) & 0xFF)};
    out.write(bytes, 4);
}

std::uint32_t get_u32(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw FormatError("flow file: truncated header in " + path.string());
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void put_f32(std::ofstream& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

}  // namespace

void write_flow_file(const std::filesystem::path& path, const FlowField& flow) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("write_flow_file: cannot open " + path.string());
    }
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, static_cast<std::uint32_t>(flow.height));
    put_u32(out, static_cast<std::uint32_t>(flow.width));
    for (std::size_t i = 0; i < flow.dy.size(); ++i) {
        put_f32(out, static_cast<float>(flow.dy[i]));
        put_f32(out, static_cast<float>(flow.dx[i]));
    }
    if (!out) {
        throw IoError("write_flow_file: write failed for " + path.string());
    }
}

FlowField read_flow_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("read_flow_file: cannot open " + path.string());
    }
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) {
        throw FormatError("read_flow_file: bad magic in " + path.string());
    }
    const std::uint32_t height = get_u32(in, path);
    const std::uint32_t width = get_u32(in, path);
    if (height == 0 || width == 0 || height > 1u << 20 || width > 1u << 20) {
        throw FormatError("read_flow_file: implausible dimensions in " + path.string());
    }
    FlowField flow(static_cast<int>(height), static_cast<int>(width));
    const std::size_t count = flow.dy.size();
    std::vector<unsigned char> raw(count * 8);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
        throw FormatError("read_flow_file: truncated data in " + path.string());
    }
    auto f32_at = [&](std::size_t off) {
        const std::uint32_t bits = static_cast<std::uint32_t>(raw[off]) |
                                   (static_cast<std::uint32_t>(raw[off + 1]) << 8) |
                                   (static_cast<std::uint32_t>(raw[off + 2]) << 16) |
                                   (static_cast<std::uint32_t>(raw[off + 3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    };
    for (std::size_t i = 0; i < count; ++i) {
        flow.dy[i] = f32_at(8 * i);
        flow.dx[i] = f32_at(8 * i + 4);
    }
    return flow;
}

}  // namespace camflow
