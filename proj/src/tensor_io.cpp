#include "rsr/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rsr/errors.hpp"

namespace rsr {

namespace {

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

template <typename T>
void write_raw(const fs::path& path, std::span<const T> values) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw RuntimeError("cannot open " + path.string() + " for writing");
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    } else {
        for (T v : values) {
            const T le = to_little(v);
            os.write(reinterpret_cast<const char*>(&le), sizeof(T));
        }
    }
    if (!os) throw RuntimeError("failed writing " + path.string());
}

template <typename T>
std::vector<T> read_raw(const fs::path& path, std::size_t count) {
    std::ifstream is(path, std::ios::binary | std::ios::ate);
    if (!is) throw RuntimeError("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(is.tellg());
    if (bytes != count * sizeof(T)) {
        throw RuntimeError(path.string() + " holds " + std::to_string(bytes) + " bytes, expected " +
                           std::to_string(count * sizeof(T)));
    }
    is.seekg(0);
    std::vector<T> out(count);
    is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(bytes));
    if (!is) throw RuntimeError("failed reading " + path.string());
    for (auto& v : out) v = to_little(v);
    return out;
}

fs::path manifest_path(const fs::path& path) {
    if (path.extension() == ".json") return path;
    fs::path p = path;
    p += ".json";
    return p;
}

}  // namespace

void write_blob(const fs::path& path, std::span<const float> values) { write_raw(path, values); }
void write_blob(const fs::path& path, std::span<const std::uint32_t> values) { write_raw(path, values); }
void write_blob(const fs::path& path, std::span<const std::uint8_t> values) { write_raw(path, values); }
std::vector<float> read_f32_blob(const fs::path& path, std::size_t count) { return read_raw<float>(path, count); }
std::vector<std::uint32_t> read_u32_blob(const fs::path& path, std::size_t count) {
    return read_raw<std::uint32_t>(path, count);
}
std::vector<std::uint8_t> read_u8_blob(const fs::path& path, std::size_t count) {
    return read_raw<std::uint8_t>(path, count);
}

void save_tensor(const fs::path& stem, const std::string& name, const Tensor& t) {
    fs::path blob = stem;
    blob += ".f32";
    nlohmann::json manifest{
        {"name", name},
        {"dtype", "f32"},
        {"shape", t.shape()},
        {"data", blob.filename().string()},
    };
    write_text(manifest_path(stem), manifest.dump(2) + "\n");
    write_blob(blob, t.values());
}

Tensor load_tensor(const fs::path& path) {
    const fs::path manifest_file = manifest_path(path);
    if (!fs::exists(manifest_file)) throw RuntimeError("tensor manifest not found: " + manifest_file.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text(manifest_file));
    } catch (const nlohmann::json::exception& e) {
        throw RuntimeError("malformed tensor manifest " + manifest_file.string() + ": " + e.what());
    }
    if (manifest.value("dtype", "") != "f32") {
        throw RuntimeError(manifest_file.string() + ": only dtype f32 is supported");
    }
    Shape shape = manifest.at("shape").get<Shape>();
    fs::path blob = manifest_file.parent_path() / manifest.value("data", manifest_file.stem().string() + ".f32");
    auto data = read_f32_blob(blob, shape_size(shape));
    return Tensor(std::move(shape), std::move(data));
}

void write_pgm16(const fs::path& path, const Tensor& map2d, float lo, float hi, std::span<const std::uint8_t> mask) {
    if (map2d.rank() != 2) throw ArgumentError("PGM export needs a 2-D map");
    if (!mask.empty() && mask.size() != map2d.size()) throw ArgumentError("PGM mask size mismatch");
    const std::size_t rows = map2d.dim(0), cols = map2d.dim(1);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw RuntimeError("cannot open " + path.string() + " for writing");
    os << "P5\n" << cols << ' ' << rows << "\n65535\n";
    const double span = hi > lo ? static_cast<double>(hi) - lo : 1.0;
    for (std::size_t i = 0; i < map2d.size(); ++i) {
        std::uint16_t g = 0;
        if (mask.empty() || mask[i]) {
            const double s = std::clamp((map2d[i] - static_cast<double>(lo)) / span, 0.0, 1.0);
            g = static_cast<std::uint16_t>(std::lround(s * 65535.0));
        }
        // PGM stores 16-bit samples most significant byte first.
        const char be[2] = {static_cast<char>(g >> 8), static_cast<char>(g & 0xff)};
        os.write(be, 2);
    }
    if (!os) throw RuntimeError("failed writing " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw RuntimeError("cannot open " + path.string() + " for writing");
    os << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw RuntimeError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace rsr
