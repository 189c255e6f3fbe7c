#pragma once

// Region-aware encoding: a background network covers the full frame and a
// small object network refines the bounding-box region, either by fitting
// the residual against the background reconstruction or the raw pixels.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rinr/image.hpp"
#include "rinr/inr.hpp"

namespace rinr {

enum class ObjectMode : std::uint8_t {
    Residual = 0,
    Direct = 1,
    None = 2,  // background only (single-network baseline)
};

std::string to_string(ObjectMode mode);
ObjectMode parse_object_mode(std::string_view text);

/// Residual r = raw - recon in [-1, 1], stored as (r + 1) / 2 in [0, 1].
struct ResidualPatch {
    int width = 0;
    int height = 0;
    std::vector<float> stored;

    double residual(std::size_t k) const { return 2.0 * stored[k] - 1.0; }
};

ResidualPatch compute_residual(const Image& raw_patch, const Image& recon_patch);

/// clamp(recon + (2 * residual_pred - 1), 0, 1); residual_pred is raw object
/// network output in stored space.
Image apply_residual(const Image& recon_patch, std::span<const float> residual_pred);

/// Area tiers mapping a bounding box to an object network size.
struct ObjectSizeTable {
    struct Tier {
        std::size_t max_area;  // inclusive; SIZE_MAX for the catch-all
        MlpArchitecture arch;
    };
    std::vector<Tier> tiers;

    void validate() const;
};

struct DatasetConfig {
    std::string name;
    MlpArchitecture background;
    std::vector<MlpArchitecture> object_candidates;  // smallest first
    MlpArchitecture single_inr_baseline;
};

/// Architectures for the three evaluation datasets (DAC-SDC, UAV123, OTB100).
const std::vector<DatasetConfig>& dataset_configs();
const DatasetConfig& dataset_config(std::string_view name);

/// Tier limits 1024 / 4096 / 16384 px, then catch-all, over the candidate list.
ObjectSizeTable object_size_table(const DatasetConfig& config);
/// DAC-SDC table: 3x10, 3x15, 5x17, 5x24.
ObjectSizeTable default_object_size_table();

MlpArchitecture select_object_arch(const BoundingBox& box, const ObjectSizeTable& table);

TrainConfig default_background_config();  // lr 1e-3, 2000 steps
TrainConfig default_object_config();      // lr 1e-3, 1000 steps

struct EncodedImage {
    int width = 0;
    int height = 0;
    ParameterSet background;
    BoundingBox bbox;
    ObjectMode mode = ObjectMode::Residual;
    ParameterSet object;  // empty when mode == None

    void validate() const;
};

struct EncodeResult {
    EncodedImage encoded;
    FitReport background_report;
    FitReport object_report;
};

struct ObjectFit {
    ParameterSet params;
    FitReport report;
};

/// Fits the object network against `background_decode` (already clamped).
ObjectFit encode_object(const Image& image, const BoundingBox& box, const Image& background_decode,
                        const MlpArchitecture& object_arch, const TrainConfig& config, ObjectMode mode);

EncodeResult encode(const Image& image, const BoundingBox& box, const MlpArchitecture& background_arch,
                    const MlpArchitecture& object_arch, const TrainConfig& background_config,
                    const TrainConfig& object_config, ObjectMode mode);

EncodeResult encode(const Image& image, const BoundingBox& box, const MlpArchitecture& background_arch,
                    const ObjectSizeTable& table, const TrainConfig& background_config,
                    const TrainConfig& object_config, ObjectMode mode);

/// Clamped full-frame output of a background network.
Image decode_background(const ParameterSet& background, int width, int height, int threads = 1);

/// Full reconstruction; pixels outside the box depend only on the background.
Image decode(const EncodedImage& encoded, int threads = 1);

/// 10*log10(1/MSE) with peak 1.0, over `region` when given; +inf on MSE 0.
double psnr(const Image& a, const Image& b, std::optional<BoundingBox> region = std::nullopt);

/// PSNR over pixels outside `box`; NaN when the box covers the image.
double psnr_outside(const Image& a, const Image& b, const BoundingBox& box);

struct Histogram {
    int bin_count = 1;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
};

/// Equal-width bins over [0, 1]; 1.0 lands in the last bin.
Histogram make_histogram(std::span<const float> values, int bin_count);

/// Shannon entropy in bits over nonzero bins.
double entropy(const Histogram& hist);
double entropy(std::span<const float> values, int bin_count);

/// alpha = encoded_bytes / reference_bytes.
double compression_ratio(std::uint64_t encoded_bytes, std::uint64_t reference_bytes);

} // namespace rinr
