#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rinr/image.hpp"

namespace rinr {

/// Binary PPM (P6). Any maxval in [1, 65535] is accepted; samples are scaled
/// by 1/maxval.
Image read_ppm(const std::filesystem::path& path);
Image decode_ppm(std::span<const std::uint8_t> bytes);

/// 8-bit P6 with round-to-nearest quantization.
void write_ppm(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> encode_ppm(const Image& image);

bool png_supported();
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

/// Dispatches on extension (.png, else PPM) for writing and on content for reading.
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

/// Channel value as stored in an 8-bit file.
std::uint8_t to_byte(float v);

/// The image after an 8-bit write/read cycle.
Image quantize_to_8bit(const Image& image);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace rinr
