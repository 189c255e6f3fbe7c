#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rinr {

/// Per-tensor min/max affine quantization.
struct QuantizedTensor {
    int bits = 8;  // 8 or 16
    float min_val = 0.0f;
    float max_val = 0.0f;
    std::vector<std::uint16_t> codes;

    std::uint32_t max_code() const { return (1u << bits) - 1u; }
    /// (max - min) / (2^bits - 1); zero for a degenerate tensor.
    double step() const;
    void validate() const;

    friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;
};

/// code = round_half_away_from_zero((w - min) / (max - min) * (2^bits - 1)).
/// A constant tensor keeps min == max and all-zero codes.
QuantizedTensor quantize(std::span<const float> values, int bits);

/// w' = min + code / (2^bits - 1) * (max - min), rounded to float.
std::vector<float> dequantize(const QuantizedTensor& q);

/// Same mapping evaluated in double, without the final float rounding.
std::vector<double> dequantize_wide(const QuantizedTensor& q);

} // namespace rinr
