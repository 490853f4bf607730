#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include "ppe/image.hpp"

namespace ppe {

// Decode an image file (PNG/JPEG/BMP) into RGB. Throws Error on failure.
Image read_image(const std::filesystem::path& path);

// Lossless PNG write; the round-trip read_image(write_png(img)) is exact.
void write_png(const std::filesystem::path& path, const Image& img);

// Decode from an in-memory buffer (HTTP frame payloads).
Image decode_image(std::span<const std::uint8_t> bytes);

// Image dimensions without keeping the pixels around.
std::optional<FrameSize> probe_dimensions(const std::filesystem::path& path);

// Bilinear resize into the letterboxed target, padding with a neutral gray.
Image letterbox_image(const Image& img, const LetterboxTransform& t,
                      std::uint8_t fill = 114);

} // namespace ppe
