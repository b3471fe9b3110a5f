#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "supergen/canvas.hpp"
#include "supergen/error.hpp"

namespace supergen {

// Little-endian primitives. The SGTN and SGTR formats are defined as LE
// regardless of host order.
namespace le {

template <typename T>
void write(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
bool read(std::istream& is, T& value) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) return false;
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
    return true;
}

}  // namespace le

inline constexpr char kTensorMagic[4] = {'S', 'G', 'T', 'N'};
inline constexpr std::uint32_t kTensorVersion = 1;

inline void write_sgtn(std::ostream& os, const Canvas& canvas) {
    os.write(kTensorMagic, 4);
    le::write<std::uint32_t>(os, kTensorVersion);
    le::write<std::uint32_t>(os, 4);
    const auto& s = canvas.shape();
    for (std::uint64_t d : {s.frames, s.channels, s.height, s.width}) le::write<std::uint64_t>(os, d);
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(canvas.data().data()),
                 static_cast<std::streamsize>(canvas.size() * sizeof(float)));
    } else {
        for (float v : canvas.data()) le::write<float>(os, v);
    }
}

// Throws IoError on malformed or truncated input.
inline Canvas read_sgtn(std::istream& is, Space space = Space::Latent) {
    char magic[4];
    if (!is.read(magic, 4)) throw IoError("SGTN: truncated header");
    if (std::memcmp(magic, kTensorMagic, 4) != 0) throw IoError("SGTN: bad magic");
    std::uint32_t version = 0, ndim = 0;
    if (!le::read(is, version) || !le::read(is, ndim)) throw IoError("SGTN: truncated header");
    if (version != kTensorVersion) throw IoError("SGTN: unsupported version " + std::to_string(version));
    if (ndim == 0 || ndim > 4) throw IoError("SGTN: unsupported rank " + std::to_string(ndim));
    std::vector<std::uint64_t> dims(ndim);
    for (auto& d : dims)
        if (!le::read(is, d)) throw IoError("SGTN: truncated dims");
    // Lower-rank tensors are read as trailing dimensions of (F, C, H, W).
    std::uint64_t full[4] = {1, 1, 1, 1};
    for (std::uint32_t i = 0; i < ndim; ++i) full[4 - ndim + i] = dims[i];
    Shape shape{full[0], full[1], full[2], full[3]};
    if (shape.size() > (std::uint64_t{1} << 34)) throw IoError("SGTN: tensor too large");
    std::vector<float> data(shape.size());
    if constexpr (std::endian::native == std::endian::little) {
        if (!is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float))))
            throw IoError("SGTN: truncated payload");
    } else {
        for (auto& v : data)
            if (!le::read(is, v)) throw IoError("SGTN: truncated payload");
    }
    return Canvas(shape, std::move(data), space);
}

inline void save_sgtn(const std::filesystem::path& path, const Canvas& canvas) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_sgtn(os, canvas);
    if (!os) throw IoError("write failed: " + path.string());
}

inline Canvas load_sgtn(const std::filesystem::path& path, Space space = Space::Latent) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    return read_sgtn(is, space);
}

// FNV-1a over the canvas' SGTN encoding.
inline std::uint64_t canvas_digest(const Canvas& canvas) {
    std::ostringstream os(std::ios::binary);
    write_sgtn(os, canvas);
    const std::string bytes = os.str();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string digest_hex(std::uint64_t d) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << d;
    return os.str();
}

// One binary PGM (P5) per (frame, channel), min-max normalized per plane.
// Returns the written paths.
inline std::vector<std::filesystem::path> export_pgm_frames(const Canvas& canvas,
                                                            const std::filesystem::path& dir,
                                                            const std::string& stem) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto& s = canvas.shape();
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t c = 0; c < s.channels; ++c) {
            auto plane = canvas.plane(f, c);
            const auto [lo, hi] = std::minmax_element(plane.begin(), plane.end());
            const double range = static_cast<double>(*hi) - *lo;
            std::ostringstream name;
            name << stem << "_f" << std::setw(3) << std::setfill('0') << f << "_c" << c << ".pgm";
            const auto path = dir / name.str();
            std::ofstream os(path, std::ios::binary);
            if (!os) throw IoError("cannot open " + path.string());
            os << "P5\n" << s.width << " " << s.height << "\n255\n";
            std::vector<unsigned char> bytes(plane.size());
            for (std::size_t i = 0; i < plane.size(); ++i) {
                const double v = range > 0.0 ? (plane[i] - *lo) / range : 0.0;
                bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
            }
            os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            written.push_back(path);
        }
    return written;
}

}  // namespace supergen
