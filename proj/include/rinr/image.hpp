#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rinr {

/// Row-major RGB image with channel values in [0, 1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels;  // (row * width + col) * 3 + channel

    Image() = default;
    Image(int w, int h, float fill = 0.0f);

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    float& at(int col, int row, int ch) {
        return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
    }
    float at(int col, int row, int ch) const {
        return pixels[(static_cast<std::size_t>(row) * width + col) * 3 + ch];
    }

    /// Throws if dimensions or pixel count are inconsistent, or values leave [0, 1].
    void validate() const;

    friend bool operator==(const Image&, const Image&) = default;
};

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    std::size_t area() const { return static_cast<std::size_t>(w) * h; }
    bool contains(int col, int row) const {
        return col >= x && col < x + w && row >= y && row < y + h;
    }
    /// Throws std::invalid_argument when the box leaves a width x height image.
    void validate(int width, int height) const;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Patch of `image` under `box`; patch (i, j) = image (x + i, y + j).
Image crop(const Image& image, const BoundingBox& box);

/// Writes `patch` into `image` at the box origin.
void paste(Image& image, const Image& patch, const BoundingBox& box);

/// Clamps raw values into [0, 1] and wraps them as an image.
Image to_image(std::span<const float> values, int width, int height);

} // namespace rinr
