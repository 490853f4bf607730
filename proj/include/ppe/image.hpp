#pragma once

#include <cstdint>
#include <vector>

#include "ppe/errors.hpp"
#include "ppe/geometry.hpp"

namespace ppe {

// Interleaved 8-bit RGB raster, row-major.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // size = width * height * 3

    Image() = default;
    Image(int w, int h) : width(w), height(h) {
        if (w <= 0 || h <= 0) {
            throw ParameterError("Image: dimensions must be positive");
        }
        pixels.assign(std::size_t(w) * h * 3, 0);
    }

    static Image filled(int w, int h, std::uint8_t r, std::uint8_t g,
                        std::uint8_t b) {
        Image img(w, h);
        for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
            img.pixels[i] = r;
            img.pixels[i + 1] = g;
            img.pixels[i + 2] = b;
        }
        return img;
    }

    std::uint8_t& at(int x, int y, int c) {
        return pixels[(std::size_t(y) * width + x) * 3 + c];
    }
    std::uint8_t at(int x, int y, int c) const {
        return pixels[(std::size_t(y) * width + x) * 3 + c];
    }

    FrameSize size() const { return {width, height}; }

    bool operator==(const Image&) const = default;
};

// Extract [x, x+w) × [y, y+h); the rectangle must lie inside the image.
Image crop_image(const Image& img, int x, int y, int w, int h);

} // namespace ppe
