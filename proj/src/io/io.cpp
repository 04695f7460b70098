// SPDX-License-Identifier: Apache-2.0
#include "physmamba/io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "physmamba/errors.hpp"

namespace physmamba::io {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t done = 0;
    while (done < bytes.size()) {
        const std::size_t n = std::min<std::size_t>(bytes.size() - done, 1u << 30);
        crc = ::crc32(crc, bytes.data() + done, static_cast<uInt>(n));
        done += n;
    }
    return static_cast<std::uint32_t>(crc);
}

void append_f32_le(std::vector<std::uint8_t>& out, std::span<const double> values) {
    out.reserve(out.size() + 4 * values.size());
    for (double v : values) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
}

std::vector<double> decode_f32_le(std::span<const std::uint8_t> bytes, std::size_t offset, std::size_t count,
                                  const std::string& file) {
    if (offset > bytes.size() || count > (bytes.size() - offset) / 4) {
        throw FormatError(file, "expected " + std::to_string(count) + " float32 values at byte " +
                                    std::to_string(offset) + " but the file has " + std::to_string(bytes.size()) +
                                    " bytes");
    }
    std::vector<double> out(count);
    const std::uint8_t* p = bytes.data() + offset;
    for (std::size_t i = 0; i < count; ++i, p += 4) {
        const std::uint32_t bits = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 | std::uint32_t{p[2]} << 16 |
                                   std::uint32_t{p[3]} << 24;
        out[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return out;
}

void quantize_f32(std::span<double> values) {
    for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing " + path.string());
}

nlohmann::ordered_json read_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    try {
        return nlohmann::ordered_json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string(), std::string("invalid JSON: ") + e.what());
    }
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << j.dump(2) << '\n';
    if (!f) throw IoError("failed writing " + path.string());
}

}  // namespace physmamba::io
