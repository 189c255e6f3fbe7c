#include "rinr/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rinr/error.hpp"

namespace rinr {

std::string to_string(ObjectMode mode) {
    switch (mode) {
    case ObjectMode::Residual: return "residual";
    case ObjectMode::Direct: return "direct";
    case ObjectMode::None: return "none";
    }
    return "unknown";
}

ObjectMode parse_object_mode(std::string_view text) {
    if (text == "residual") return ObjectMode::Residual;
    if (text == "direct") return ObjectMode::Direct;
    if (text == "none") return ObjectMode::None;
    throw std::invalid_argument("unknown object mode '" + std::string(text) + "'");
}

ResidualPatch compute_residual(const Image& raw_patch, const Image& recon_patch) {
    if (raw_patch.width != recon_patch.width || raw_patch.height != recon_patch.height ||
        raw_patch.pixels.size() != recon_patch.pixels.size())
        throw ShapeError("compute_residual: patch dimensions differ");
    ResidualPatch out{raw_patch.width, raw_patch.height,
                      std::vector<float>(raw_patch.pixels.size())};
    for (std::size_t k = 0; k < out.stored.size(); ++k) {
        const double r = static_cast<double>(raw_patch.pixels[k]) - recon_patch.pixels[k];
        out.stored[k] = static_cast<float>((r + 1.0) * 0.5);
    }
    return out;
}

Image apply_residual(const Image& recon_patch, std::span<const float> residual_pred) {
    if (residual_pred.size() != recon_patch.pixels.size())
        throw ShapeError("apply_residual: residual size does not match patch");
    Image out(recon_patch.width, recon_patch.height);
    for (std::size_t k = 0; k < out.pixels.size(); ++k) {
        const double v = recon_patch.pixels[k] + (2.0 * residual_pred[k] - 1.0);
        out.pixels[k] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

void ObjectSizeTable::validate() const {
    if (tiers.empty()) throw std::invalid_argument("object size table is empty");
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        tiers[i].arch.validate();
        if (i > 0 && tiers[i].max_area <= tiers[i - 1].max_area)
            throw std::invalid_argument("object size table thresholds must strictly increase");
    }
    if (tiers.back().max_area != std::numeric_limits<std::size_t>::max())
        throw std::invalid_argument("object size table needs a catch-all last tier");
}

const std::vector<DatasetConfig>& dataset_configs() {
    static const std::vector<DatasetConfig> configs = {
        {"DAC-SDC", make_arch(10, 30),
         {make_arch(3, 10), make_arch(3, 15), make_arch(5, 17), make_arch(5, 24)},
         make_arch(16, 48)},
        {"UAV123", make_arch(10, 36),
         {make_arch(3, 15), make_arch(5, 17), make_arch(5, 24), make_arch(6, 28)},
         make_arch(16, 55)},
        {"OTB100", make_arch(10, 28),
         {make_arch(3, 15), make_arch(5, 17), make_arch(5, 24), make_arch(6, 28)},
         make_arch(14, 45)},
    };
    return configs;
}

const DatasetConfig& dataset_config(std::string_view name) {
    for (const auto& c : dataset_configs())
        if (c.name == name) return c;
    throw std::invalid_argument("unknown dataset '" + std::string(name) + "'");
}

ObjectSizeTable object_size_table(const DatasetConfig& config) {
    static constexpr std::size_t limits[] = {1024, 4096, 16384};
    ObjectSizeTable table;
    for (std::size_t i = 0; i < config.object_candidates.size(); ++i) {
        const std::size_t limit =
            i < std::size(limits) && i + 1 < config.object_candidates.size()
                ? limits[i]
                : std::numeric_limits<std::size_t>::max();
        table.tiers.push_back({limit, config.object_candidates[i]});
        if (limit == std::numeric_limits<std::size_t>::max()) break;
    }
    table.validate();
    return table;
}

ObjectSizeTable default_object_size_table() { return object_size_table(dataset_configs().front()); }

MlpArchitecture select_object_arch(const BoundingBox& box, const ObjectSizeTable& table) {
    table.validate();
    const std::size_t area = box.area();
    for (const auto& tier : table.tiers)
        if (area <= tier.max_area) return tier.arch;
    return table.tiers.back().arch;
}

TrainConfig default_background_config() {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.steps = 2000;
    return c;
}

TrainConfig default_object_config() {
    TrainConfig c;
    c.learning_rate = 1e-3;
    c.steps = 1000;
    return c;
}

void EncodedImage::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("encoded image dimensions must be >= 1");
    background.validate();
    bbox.validate(width, height);
    if (mode != ObjectMode::None) object.validate();
}

ObjectFit encode_object(const Image& image, const BoundingBox& box, const Image& background_decode,
                        const MlpArchitecture& object_arch, const TrainConfig& config, ObjectMode mode) {
    box.validate(image.width, image.height);
    if (background_decode.width != image.width || background_decode.height != image.height)
        throw ShapeError("background decode dimensions differ from the image");
    if (mode == ObjectMode::None) throw std::invalid_argument("encode_object needs residual or direct mode");

    const Image raw_patch = crop(image, box);
    std::vector<float> target;
    if (mode == ObjectMode::Residual) {
        target = compute_residual(raw_patch, crop(background_decode, box)).stored;
    } else {
        target = raw_patch.pixels;
    }
    auto grid = CoordinateGrid::make(box.w, box.h);
    auto res = fit(object_arch, grid, target, config);
    return {std::move(res.params), std::move(res.report)};
}

EncodeResult encode(const Image& image, const BoundingBox& box, const MlpArchitecture& background_arch,
                    const MlpArchitecture& object_arch, const TrainConfig& background_config,
                    const TrainConfig& object_config, ObjectMode mode) {
    image.validate();
    box.validate(image.width, image.height);
    background_arch.validate();

    EncodeResult out;
    out.encoded.width = image.width;
    out.encoded.height = image.height;
    out.encoded.bbox = box;
    out.encoded.mode = mode;

    auto bg = fit(background_arch, CoordinateGrid::make(image.width, image.height), image.pixels,
                  background_config);
    out.encoded.background = std::move(bg.params);
    out.background_report = std::move(bg.report);

    if (mode != ObjectMode::None) {
        const Image bg_decode =
            decode_background(out.encoded.background, image.width, image.height, background_config.threads);
        auto obj = encode_object(image, box, bg_decode, object_arch, object_config, mode);
        out.encoded.object = std::move(obj.params);
        out.object_report = std::move(obj.report);
    }
    return out;
}

EncodeResult encode(const Image& image, const BoundingBox& box, const MlpArchitecture& background_arch,
                    const ObjectSizeTable& table, const TrainConfig& background_config,
                    const TrainConfig& object_config, ObjectMode mode) {
    return encode(image, box, background_arch, select_object_arch(box, table), background_config,
                  object_config, mode);
}

Image decode_background(const ParameterSet& background, int width, int height, int threads) {
    const auto raw = forward(background, CoordinateGrid::make(width, height), threads);
    return to_image(raw, width, height);
}

Image decode(const EncodedImage& encoded, int threads) {
    encoded.validate();
    Image out = decode_background(encoded.background, encoded.width, encoded.height, threads);
    if (encoded.mode == ObjectMode::None) return out;

    const auto& box = encoded.bbox;
    const auto pred = forward(encoded.object, CoordinateGrid::make(box.w, box.h), threads);
    const Image patch = encoded.mode == ObjectMode::Residual ? apply_residual(crop(out, box), pred)
                                                             : to_image(pred, box.w, box.h);
    paste(out, patch, box);
    return out;
}

namespace {

void require_same_dims(const Image& a, const Image& b) {
    if (a.width != b.width || a.height != b.height || a.pixels.size() != b.pixels.size())
        throw ShapeError("psnr: image dimensions differ");
}

} // namespace

double psnr(const Image& a, const Image& b, std::optional<BoundingBox> region) {
    require_same_dims(a, b);
    const BoundingBox box = region.value_or(BoundingBox{0, 0, a.width, a.height});
    box.validate(a.width, a.height);
    double acc = 0.0;
    for (int row = box.y; row < box.y + box.h; ++row)
        for (int col = box.x; col < box.x + box.w; ++col)
            for (int c = 0; c < 3; ++c) {
                const double d = static_cast<double>(a.at(col, row, c)) - b.at(col, row, c);
                acc += d * d;
            }
    return psnr_from_mse(acc / (static_cast<double>(box.area()) * 3.0));
}

double psnr_outside(const Image& a, const Image& b, const BoundingBox& box) {
    require_same_dims(a, b);
    box.validate(a.width, a.height);
    double acc = 0.0;
    std::size_t count = 0;
    for (int row = 0; row < a.height; ++row)
        for (int col = 0; col < a.width; ++col) {
            if (box.contains(col, row)) continue;
            for (int c = 0; c < 3; ++c) {
                const double d = static_cast<double>(a.at(col, row, c)) - b.at(col, row, c);
                acc += d * d;
            }
            count += 3;
        }
    if (count == 0) return std::numeric_limits<double>::quiet_NaN();
    return psnr_from_mse(acc / static_cast<double>(count));
}

Histogram make_histogram(std::span<const float> values, int bin_count) {
    if (bin_count < 1) throw std::invalid_argument("bin_count must be >= 1");
    if (values.empty()) throw std::invalid_argument("entropy of an empty value set");
    Histogram h{bin_count, std::vector<std::uint64_t>(static_cast<std::size_t>(bin_count), 0), 0};
    for (float v : values) {
        if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("histogram value outside [0, 1]");
        const auto bin = std::min(static_cast<int>(static_cast<double>(v) * bin_count), bin_count - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
        ++h.total;
    }
    return h;
}

double entropy(const Histogram& hist) {
    if (hist.total == 0) throw std::invalid_argument("entropy of an empty histogram");
    double h = 0.0;
    for (auto c : hist.counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(hist.total);
        h -= p * std::log2(p);
    }
    return h == 0.0 ? 0.0 : h;  // avoid -0
}

double entropy(std::span<const float> values, int bin_count) {
    return entropy(make_histogram(values, bin_count));
}

double compression_ratio(std::uint64_t encoded_bytes, std::uint64_t reference_bytes) {
    if (reference_bytes == 0) throw std::invalid_argument("compression_ratio: reference size is zero");
    return static_cast<double>(encoded_bytes) / static_cast<double>(reference_bytes);
}

} // namespace rinr
