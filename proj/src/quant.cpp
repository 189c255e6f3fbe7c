#include "rinr/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rinr {

namespace {

void check_bits(int bits) {
    if (bits != 8 && bits != 16)
        throw std::invalid_argument("quantization supports 8 or 16 bits, got " + std::to_string(bits));
}

} // namespace

double QuantizedTensor::step() const {
    return (static_cast<double>(max_val) - min_val) / max_code();
}

void QuantizedTensor::validate() const {
    check_bits(bits);
    if (!std::isfinite(min_val) || !std::isfinite(max_val) || min_val > max_val)
        throw std::invalid_argument("quantized tensor range is invalid");
    const auto top = max_code();
    for (auto c : codes)
        if (c > top) throw std::invalid_argument("quantization code out of range");
    if (min_val == max_val && std::any_of(codes.begin(), codes.end(), [](auto c) { return c != 0; }))
        throw std::invalid_argument("degenerate tensor must carry zero codes");
}

QuantizedTensor quantize(std::span<const float> values, int bits) {
    check_bits(bits);
    if (values.empty()) throw std::invalid_argument("cannot quantize an empty tensor");
    for (float v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("cannot quantize non-finite values");

    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    QuantizedTensor q;
    q.bits = bits;
    q.min_val = *lo;
    q.max_val = *hi;
    q.codes.assign(values.size(), 0);
    if (q.min_val == q.max_val) return q;

    const double range = static_cast<double>(q.max_val) - q.min_val;
    const double top = q.max_code();
    for (std::size_t i = 0; i < values.size(); ++i) {
        // std::round rounds halfway cases away from zero
        const double code = std::round((values[i] - static_cast<double>(q.min_val)) / range * top);
        q.codes[i] = static_cast<std::uint16_t>(std::clamp(code, 0.0, top));
    }
    return q;
}

std::vector<double> dequantize_wide(const QuantizedTensor& q) {
    q.validate();
    const double range = static_cast<double>(q.max_val) - q.min_val;
    const auto top = q.max_code();
    std::vector<double> out(q.codes.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto c = q.codes[i];
        if (c == 0)
            out[i] = q.min_val;
        else if (c == top)
            out[i] = q.max_val;
        else
            out[i] = q.min_val + static_cast<double>(c) / top * range;
    }
    return out;
}

std::vector<float> dequantize(const QuantizedTensor& q) {
    const auto wide = dequantize_wide(q);
    return {wide.begin(), wide.end()};
}

} // namespace rinr
