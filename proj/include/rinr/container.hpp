#pragma once

// ".rinr" container. Little-endian throughout:
//
//   offset  size  field
//   0       4     magic "RINR"
//   4       2     format version (u16, currently 1)
//   6       4     image width (u32)
//   10      4     image height (u32)
//   14      16    bbox x, y, w, h (u32 each)
//   30      1     object mode (u8: 0 residual, 1 direct, 2 none)
//   31      12    background arch: layer_count u32, hidden_dim u32, w0 f32
//   43      12    object arch, same layout (all zero when mode is none)
//   55      ...   background tensor records, then object tensor records
//   end-4   4     CRC-32 (IEEE) of every preceding byte
//
// Tensor records appear per layer, weight then bias:
//   bits u8 | min f32 | max f32 | codes (u8 or u16 each, element count
//   implied by the architecture)

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rinr/codec.hpp"
#include "rinr/quant.hpp"

namespace rinr {

inline constexpr std::array<std::uint8_t, 4> kContainerMagic = {'R', 'I', 'N', 'R'};
inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 55;
inline constexpr std::size_t kTensorRecordOverhead = 9;
inline constexpr std::size_t kContainerCrcBytes = 4;

struct QuantPolicy {
    int background_bits = 8;
    int object_bits = 16;
};

/// Baseline single-network files are stored at 16 bits.
inline constexpr QuantPolicy kBaselinePolicy{16, 16};

struct QuantizedNetwork {
    MlpArchitecture arch;
    std::vector<QuantizedTensor> tensors;  // weight, bias per layer

    friend bool operator==(const QuantizedNetwork&, const QuantizedNetwork&) = default;
};

struct QuantizedImage {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    BoundingBox bbox;
    ObjectMode mode = ObjectMode::Residual;
    QuantizedNetwork background;
    QuantizedNetwork object;  // empty when mode == None

    friend bool operator==(const QuantizedImage&, const QuantizedImage&) = default;
};

QuantizedNetwork quantize_network(const ParameterSet& params, int bits);
ParameterSet dequantize_network(const QuantizedNetwork& net);

QuantizedImage quantize_image(const EncodedImage& encoded, QuantPolicy policy = {});
EncodedImage dequantize_image(const QuantizedImage& image);

std::vector<std::uint8_t> serialize(const QuantizedImage& image);
/// Throws ContainerError with a distinct kind for bad magic, version, CRC,
/// truncation, or otherwise malformed content.
QuantizedImage parse_container(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> pack(const EncodedImage& encoded, QuantPolicy policy = {});
EncodedImage unpack(std::span<const std::uint8_t> bytes);

/// Exact file size for the given architectures and bit widths; pass no
/// object architecture for a background-only file.
std::size_t container_size(const MlpArchitecture& background, int background_bits,
                           const std::optional<MlpArchitecture>& object, int object_bits);

/// IEEE CRC-32 (zlib polynomial).
std::uint32_t crc32(std::span<const std::uint8_t> bytes);

} // namespace rinr
