#include "rinr/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rinr/error.hpp"

namespace rinr {

namespace {

using Kind = ContainerError::Kind;

// Structural limits used while walking untrusted headers.
constexpr std::uint32_t kMaxLayers = 4096;
constexpr std::uint32_t kMaxHidden = 65535;

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    std::vector<std::uint8_t>& buffer() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() {
        auto b = take(2);
        return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
    }
    std::uint32_t u32() {
        auto b = take(4);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    float f32() { return std::bit_cast<float>(u32()); }

    std::span<const std::uint8_t> take(std::size_t n) {
        if (n > limit_ - pos_)
            throw ContainerError(Kind::Truncated, "container truncated at byte " + std::to_string(pos_));
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t position() const { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

struct RawArch {
    std::uint32_t layer_count;
    std::uint32_t hidden_dim;
    float omega;
};

void write_arch(Writer& w, const MlpArchitecture& a) {
    w.u32(static_cast<std::uint32_t>(a.layer_count));
    w.u32(static_cast<std::uint32_t>(a.hidden_dim));
    w.f32(a.frequency_scale);
}

void write_network(Writer& w, const QuantizedNetwork& net) {
    for (const auto& t : net.tensors) {
        w.u8(static_cast<std::uint8_t>(t.bits));
        w.f32(t.min_val);
        w.f32(t.max_val);
        for (auto c : t.codes) {
            if (t.bits == 8)
                w.u8(static_cast<std::uint8_t>(c));
            else
                w.u16(c);
        }
    }
}

// Element counts of the weight/bias tensors, in file order.
std::vector<std::size_t> tensor_sizes(const MlpArchitecture& a) {
    std::vector<std::size_t> sizes;
    for (int l = 0; l < a.layer_count; ++l) {
        const std::size_t in = l == 0 ? a.input_dim : a.hidden_dim;
        const std::size_t out = l + 1 == a.layer_count ? a.output_dim : a.hidden_dim;
        sizes.push_back(in * out);
        sizes.push_back(out);
    }
    return sizes;
}

MlpArchitecture to_arch(const RawArch& raw) {
    if (raw.layer_count < 2 || raw.layer_count > kMaxLayers || raw.hidden_dim < 1 ||
        raw.hidden_dim > kMaxHidden)
        throw ContainerError(Kind::Malformed, "container holds an invalid network architecture");
    MlpArchitecture a = make_arch(static_cast<int>(raw.layer_count), static_cast<int>(raw.hidden_dim),
                                  raw.omega);
    try {
        a.validate();
    } catch (const std::invalid_argument& e) {
        throw ContainerError(Kind::Malformed, std::string("container architecture: ") + e.what());
    }
    return a;
}

QuantizedNetwork read_network(Reader& r, const MlpArchitecture& arch) {
    QuantizedNetwork net{arch, {}};
    for (auto count : tensor_sizes(arch)) {
        QuantizedTensor t;
        t.bits = r.u8();
        if (t.bits != 8 && t.bits != 16)
            throw ContainerError(Kind::Malformed, "tensor record has unsupported bit width " +
                                                      std::to_string(t.bits));
        t.min_val = r.f32();
        t.max_val = r.f32();
        auto payload = r.take(count * static_cast<std::size_t>(t.bits / 8));
        t.codes.resize(count);
        for (std::size_t i = 0; i < count; ++i)
            t.codes[i] = t.bits == 8 ? payload[i]
                                     : static_cast<std::uint16_t>(payload[2 * i] | (payload[2 * i + 1] << 8));
        net.tensors.push_back(std::move(t));
    }
    return net;
}

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces
    constexpr std::size_t kPiece = 1u << 30;
    for (std::size_t off = 0; off < bytes.size(); off += kPiece) {
        const auto n = std::min(kPiece, bytes.size() - off);
        crc = ::crc32(crc, bytes.data() + off, static_cast<uInt>(n));
    }
    return static_cast<std::uint32_t>(crc);
}

QuantizedNetwork quantize_network(const ParameterSet& params, int bits) {
    params.validate();
    QuantizedNetwork net{params.arch, {}};
    for (const auto& l : params.layers) {
        net.tensors.push_back(quantize(l.weight, bits));
        net.tensors.push_back(quantize(l.bias, bits));
    }
    return net;
}

ParameterSet dequantize_network(const QuantizedNetwork& net) {
    ParameterSet ps = zero_parameters(net.arch);
    if (net.tensors.size() != ps.layers.size() * 2)
        throw ShapeError("quantized network has the wrong number of tensors");
    for (std::size_t l = 0; l < ps.layers.size(); ++l) {
        auto w = dequantize(net.tensors[2 * l]);
        auto b = dequantize(net.tensors[2 * l + 1]);
        if (w.size() != ps.layers[l].weight.size() || b.size() != ps.layers[l].bias.size())
            throw ShapeError("quantized tensor size does not match layer " + std::to_string(l));
        ps.layers[l].weight = std::move(w);
        ps.layers[l].bias = std::move(b);
    }
    return ps;
}

QuantizedImage quantize_image(const EncodedImage& encoded, QuantPolicy policy) {
    encoded.validate();
    QuantizedImage q;
    q.width = static_cast<std::uint32_t>(encoded.width);
    q.height = static_cast<std::uint32_t>(encoded.height);
    q.bbox = encoded.bbox;
    q.mode = encoded.mode;
    q.background = quantize_network(encoded.background, policy.background_bits);
    if (encoded.mode != ObjectMode::None) q.object = quantize_network(encoded.object, policy.object_bits);
    return q;
}

EncodedImage dequantize_image(const QuantizedImage& image) {
    EncodedImage e;
    e.width = static_cast<int>(image.width);
    e.height = static_cast<int>(image.height);
    e.bbox = image.bbox;
    e.mode = image.mode;
    e.background = dequantize_network(image.background);
    if (image.mode != ObjectMode::None) e.object = dequantize_network(image.object);
    e.validate();
    return e;
}

std::vector<std::uint8_t> serialize(const QuantizedImage& image) {
    Writer w;
    w.bytes(kContainerMagic);
    w.u16(kContainerVersion);
    w.u32(image.width);
    w.u32(image.height);
    w.u32(static_cast<std::uint32_t>(image.bbox.x));
    w.u32(static_cast<std::uint32_t>(image.bbox.y));
    w.u32(static_cast<std::uint32_t>(image.bbox.w));
    w.u32(static_cast<std::uint32_t>(image.bbox.h));
    w.u8(static_cast<std::uint8_t>(image.mode));
    write_arch(w, image.background.arch);
    if (image.mode == ObjectMode::None) {
        w.u32(0);
        w.u32(0);
        w.f32(0.0f);
    } else {
        write_arch(w, image.object.arch);
    }
    write_network(w, image.background);
    if (image.mode != ObjectMode::None) write_network(w, image.object);
    auto& buf = w.buffer();
    const auto crc = crc32(buf);
    w.u32(crc);
    return std::move(buf);
}

QuantizedImage parse_container(std::span<const std::uint8_t> bytes) {
    const std::size_t magic_len = std::min(bytes.size(), kContainerMagic.size());
    if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len),
                    kContainerMagic.begin()))
        throw ContainerError(Kind::BadMagic, "not a .rinr container (bad magic)");
    if (bytes.size() < kContainerHeaderBytes + kContainerCrcBytes)
        throw ContainerError(Kind::Truncated, "container shorter than its header");

    Reader r(bytes, bytes.size() - kContainerCrcBytes);
    r.take(kContainerMagic.size());
    const auto version = r.u16();
    if (version != kContainerVersion)
        throw ContainerError(Kind::BadVersion, "unsupported container version " + std::to_string(version));

    QuantizedImage q;
    q.width = r.u32();
    q.height = r.u32();
    const std::uint32_t box[4] = {r.u32(), r.u32(), r.u32(), r.u32()};
    const auto mode = r.u8();
    const RawArch bg_raw{r.u32(), r.u32(), r.f32()};
    const RawArch obj_raw{r.u32(), r.u32(), r.f32()};
    if (mode > static_cast<std::uint8_t>(ObjectMode::None))
        throw ContainerError(Kind::Malformed, "unknown object mode " + std::to_string(mode));
    q.mode = static_cast<ObjectMode>(mode);

    q.background = read_network(r, to_arch(bg_raw));
    if (q.mode == ObjectMode::None) {
        if (obj_raw.layer_count != 0 || obj_raw.hidden_dim != 0 || std::bit_cast<std::uint32_t>(obj_raw.omega) != 0)
            throw ContainerError(Kind::Malformed, "background-only container carries an object architecture");
    } else {
        q.object = read_network(r, to_arch(obj_raw));
    }
    if (r.position() != bytes.size() - kContainerCrcBytes)
        throw ContainerError(Kind::Malformed, "unexpected trailing bytes in container");

    const auto body = bytes.first(bytes.size() - kContainerCrcBytes);
    Reader tail(bytes.subspan(body.size()), kContainerCrcBytes);
    if (crc32(body) != tail.u32()) throw ContainerError(Kind::BadCrc, "container CRC mismatch");

    constexpr std::uint32_t kMaxDim = 1u << 30;
    if (q.width < 1 || q.height < 1 || q.width > kMaxDim || q.height > kMaxDim)
        throw ContainerError(Kind::Malformed, "container has invalid image dimensions");
    for (auto v : box)
        if (v > kMaxDim) throw ContainerError(Kind::Malformed, "container has an invalid bounding box");
    q.bbox = {static_cast<int>(box[0]), static_cast<int>(box[1]), static_cast<int>(box[2]),
              static_cast<int>(box[3])};
    try {
        q.bbox.validate(static_cast<int>(q.width), static_cast<int>(q.height));
        for (const auto& t : q.background.tensors) t.validate();
        for (const auto& t : q.object.tensors) t.validate();
    } catch (const std::invalid_argument& e) {
        throw ContainerError(Kind::Malformed, e.what());
    }
    return q;
}

std::vector<std::uint8_t> pack(const EncodedImage& encoded, QuantPolicy policy) {
    return serialize(quantize_image(encoded, policy));
}

EncodedImage unpack(std::span<const std::uint8_t> bytes) {
    return dequantize_image(parse_container(bytes));
}

std::size_t container_size(const MlpArchitecture& background, int background_bits,
                           const std::optional<MlpArchitecture>& object, int object_bits) {
    auto network_bytes = [](const MlpArchitecture& a, int bits) {
        a.validate();
        return a.parameter_count() * static_cast<std::size_t>(bits / 8) +
               2 * static_cast<std::size_t>(a.layer_count) * kTensorRecordOverhead;
    };
    std::size_t total = kContainerHeaderBytes + kContainerCrcBytes + network_bytes(background, background_bits);
    if (object) total += network_bytes(*object, object_bits);
    return total;
}

} // namespace rinr
