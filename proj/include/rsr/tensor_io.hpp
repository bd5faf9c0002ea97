#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "rsr/tensor.hpp"

namespace rsr {

namespace fs = std::filesystem;

// On-disk tensor: `<stem>.json` manifest {name, dtype: "f32", shape, data}
// next to `<stem>.f32`, a flat little-endian float32 blob.
void save_tensor(const fs::path& stem, const std::string& name, const Tensor& t);

// Accepts either the manifest path or the stem.
Tensor load_tensor(const fs::path& path);

// Raw little-endian blobs, shared by the tensor and LUT dumps.
void write_blob(const fs::path& path, std::span<const float> values);
void write_blob(const fs::path& path, std::span<const std::uint32_t> values);
void write_blob(const fs::path& path, std::span<const std::uint8_t> values);
std::vector<float> read_f32_blob(const fs::path& path, std::size_t count);
std::vector<std::uint32_t> read_u32_blob(const fs::path& path, std::size_t count);
std::vector<std::uint8_t> read_u8_blob(const fs::path& path, std::size_t count);

// 16-bit binary PGM; values in [lo, hi] map affinely onto [0, 65535].
// Cells whose mask entry is 0 are written as 0.
void write_pgm16(const fs::path& path, const Tensor& map2d, float lo, float hi,
                 std::span<const std::uint8_t> mask = {});

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);

}  // namespace rsr
