#pragma once

#include "refcanvas/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace refcanvas {

/// Decodes PNG, JPEG or binary PPM (P6), detected by magic bytes.
/// Throws ErrorCode::input on anything else or on corrupt data.
Image decode_image(std::span<const std::uint8_t> bytes);

/// Lossless 8-bit RGB PNG. Output bytes depend only on the quantized pixels.
std::vector<std::uint8_t> encode_png(const Image &image);

std::vector<std::uint8_t> read_file(const std::filesystem::path &path);
/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path &path, const std::string &text);

} // namespace refcanvas
