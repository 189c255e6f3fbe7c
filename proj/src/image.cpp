#include "rinr/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rinr/error.hpp"

namespace rinr {

Image::Image(int w, int h, float fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw std::invalid_argument("image dimensions must be >= 1");
    pixels.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

void Image::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("image dimensions must be >= 1");
    if (pixels.size() != pixel_count() * 3)
        throw ShapeError("image holds " + std::to_string(pixels.size()) + " values, expected " +
                         std::to_string(pixel_count() * 3));
    for (float v : pixels)
        if (!(v >= 0.0f && v <= 1.0f))
            throw std::invalid_argument("image channel value outside [0, 1]");
}

void BoundingBox::validate(int width, int height) const {
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > width || y + h > height)
        throw std::invalid_argument("bounding box (" + std::to_string(x) + "," + std::to_string(y) +
                                    "," + std::to_string(w) + "," + std::to_string(h) +
                                    ") does not fit a " + std::to_string(width) + "x" +
                                    std::to_string(height) + " image");
}

Image crop(const Image& image, const BoundingBox& box) {
    box.validate(image.width, image.height);
    Image out(box.w, box.h);
    for (int j = 0; j < box.h; ++j)
        for (int i = 0; i < box.w; ++i)
            for (int c = 0; c < 3; ++c) out.at(i, j, c) = image.at(box.x + i, box.y + j, c);
    return out;
}

void paste(Image& image, const Image& patch, const BoundingBox& box) {
    box.validate(image.width, image.height);
    if (patch.width != box.w || patch.height != box.h)
        throw ShapeError("patch dimensions do not match bounding box");
    for (int j = 0; j < box.h; ++j)
        for (int i = 0; i < box.w; ++i)
            for (int c = 0; c < 3; ++c) image.at(box.x + i, box.y + j, c) = patch.at(i, j, c);
}

Image to_image(std::span<const float> values, int width, int height) {
    Image out(width, height);
    if (values.size() != out.pixels.size())
        throw ShapeError("value count does not match image dimensions");
    std::transform(values.begin(), values.end(), out.pixels.begin(),
                   [](float v) { return std::clamp(v, 0.0f, 1.0f); });
    return out;
}

} // namespace rinr
