#include "rinr/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#ifdef RINR_HAVE_PNG
#include <png.h>
#endif

namespace rinr {

namespace {

class PpmCursor {
public:
    explicit PpmCursor(std::span<const std::uint8_t> b) : bytes_(b) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long number() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw std::runtime_error("malformed PPM header");
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_++] - '0');
            if (v > 1'000'000'000) throw std::runtime_error("PPM header value too large");
        }
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::uint8_t to_byte(float v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

Image quantize_to_8bit(const Image& image) {
    Image out = image;
    for (auto& v : out.pixels) v = static_cast<float>(to_byte(v) / 255.0);
    return out;
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw std::runtime_error("not a binary PPM (P6) file");
    PpmCursor cur(bytes);
    cur.pos_ = 2;
    const long width = cur.number();
    const long height = cur.number();
    const long maxval = cur.number();
    if (width < 1 || height < 1) throw std::runtime_error("PPM has zero size");
    if (maxval < 1 || maxval > 65535) throw std::runtime_error("PPM maxval out of range");
    if (cur.pos_ >= bytes.size() || !std::isspace(bytes[cur.pos_]))
        throw std::runtime_error("malformed PPM header");
    ++cur.pos_;

    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    const std::size_t samples = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3;
    if (bytes.size() - cur.pos_ < samples * sample_bytes) throw std::runtime_error("PPM pixel data truncated");

    Image img(static_cast<int>(width), static_cast<int>(height));
    const auto* data = bytes.data() + cur.pos_;
    for (std::size_t k = 0; k < samples; ++k) {
        const unsigned s = sample_bytes == 1 ? data[k] : (static_cast<unsigned>(data[2 * k]) << 8) | data[2 * k + 1];
        if (s > static_cast<unsigned>(maxval)) throw std::runtime_error("PPM sample exceeds maxval");
        img.pixels[k] = static_cast<float>(static_cast<double>(s) / static_cast<double>(maxval));
    }
    return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
    image.validate();
    const std::string header =
        "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + image.pixels.size());
    for (float v : image.pixels) out.push_back(to_byte(v));
    return out;
}

Image read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file_bytes(path)); }

void write_ppm(const std::filesystem::path& path, const Image& image) {
    write_file_bytes(path, encode_ppm(image));
}

#ifdef RINR_HAVE_PNG

bool png_supported() { return true; }

Image read_png(const std::filesystem::path& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.string().c_str()))
        throw std::runtime_error("cannot read PNG " + path.string() + ": " + png.message);
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&png);
        throw std::runtime_error("cannot decode PNG " + path.string() + ": " + png.message);
    }
    Image img(static_cast<int>(png.width), static_cast<int>(png.height));
    for (std::size_t k = 0; k < img.pixels.size(); ++k) img.pixels[k] = static_cast<float>(buf[k] / 255.0);
    return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
    image.validate();
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(image.pixels.size());
    std::transform(image.pixels.begin(), image.pixels.end(), buf.begin(), to_byte);
    if (!png_image_write_to_file(&png, path.string().c_str(), 0, buf.data(), 0, nullptr))
        throw std::runtime_error("cannot write PNG " + path.string() + ": " + png.message);
}

#else

bool png_supported() { return false; }

Image read_png(const std::filesystem::path& path) {
    throw std::runtime_error("PNG support not compiled in: " + path.string());
}

void write_png(const std::filesystem::path& path, const Image&) {
    throw std::runtime_error("PNG support not compiled in: " + path.string());
}

#endif

Image read_image(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    static constexpr std::uint8_t kPngSig[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin()))
        return read_png(path);
    return decode_ppm(bytes);
}

void write_image(const std::filesystem::path& path, const Image& image) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png")
        write_png(path, image);
    else
        write_ppm(path, image);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw std::runtime_error("error reading " + path.string());
    return out;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("error writing " + path.string());
}

} // namespace rinr
