#pragma once

// Coordinate MLP (sinusoidal hidden layers, linear head) plus the exact
// reverse-mode gradient, Adam, and the full-batch fitting loop shared by
// background and object networks.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rinr {

struct MlpArchitecture {
    int layer_count = 2;  // affine layers, including the output layer
    int hidden_dim = 1;
    int input_dim = 2;
    int output_dim = 3;
    float frequency_scale = 30.0f;

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;

    std::size_t parameter_count() const;

    /// "LxH", e.g. "10x30".
    std::string to_string() const;

    /// Parses "LxH" (case-insensitive 'x'); the result is validated.
    static MlpArchitecture parse(std::string_view text);

    friend bool operator==(const MlpArchitecture&, const MlpArchitecture&) = default;
};

inline MlpArchitecture make_arch(int layer_count, int hidden_dim, float frequency_scale = 30.0f) {
    MlpArchitecture a;
    a.layer_count = layer_count;
    a.hidden_dim = hidden_dim;
    a.frequency_scale = frequency_scale;
    return a;
}

std::size_t parameter_count(const MlpArchitecture& arch);

struct DenseLayer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<float> weight;  // out_dim x in_dim, row-major
    std::vector<float> bias;    // out_dim
};

/// Weights of one network. The flat order used by the optimizer and the
/// container is layer by layer, weight (row-major) then bias.
struct ParameterSet {
    MlpArchitecture arch;
    std::vector<DenseLayer> layers;

    std::size_t size() const;
    void validate() const;  // throws ShapeError
    std::vector<float> flatten() const;
    void assign_flat(std::span<const float> values);

    friend bool operator==(const ParameterSet& a, const ParameterSet& b);
};

/// Correctly shaped, all zeros.
ParameterSet zero_parameters(const MlpArchitecture& arch);

/// Row-major list of normalized (x, y) pairs. Any ordering of coordinates is
/// allowed; width/height describe the image the default ordering came from.
struct CoordinateGrid {
    int width = 0;
    int height = 0;
    std::vector<float> coords;  // x0, y0, x1, y1, ...

    std::size_t size() const { return coords.size() / 2; }

    /// x = 2*col/(W-1) - 1, y = 2*row/(H-1) - 1; a single-pixel axis maps to 0.
    static CoordinateGrid make(int width, int height);
};

struct TrainConfig {
    double learning_rate = 1e-3;
    int steps = 2000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    int threads = 1;
    // Return the lowest-loss iterate instead of the last one. Adam on deep
    // sinusoidal nets spikes now and then, and the last step may land on one.
    bool keep_best = true;

    void validate() const;
};

struct FitReport {
    std::vector<double> loss_trace;  // MSE before each update
    double final_mse = 0.0;          // unclamped prediction of the returned parameters
    double final_psnr_db = 0.0;      // clamped prediction of the returned parameters
    int steps_run = 0;
    int returned_step = 0;  // updates applied to the returned parameters
    std::chrono::duration<double> wall_time{0.0};
};

struct AdamState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;

    static AdamState zeros(const ParameterSet& params);
};

struct LossAndGradient {
    double loss = 0.0;
    ParameterSet gradient;
};

struct FitResult {
    ParameterSet params;
    FitReport report;
};

/// SIREN-style initialization: first layer U(-1/fan_in, 1/fan_in), later
/// layers U(-sqrt(6/fan_in)/w0, sqrt(6/fan_in)/w0), zero biases.
ParameterSet init_parameters(const MlpArchitecture& arch, std::uint64_t seed);

/// Raw network output, 3 floats per coordinate, unclamped. Results are
/// bit-identical for every thread count.
std::vector<float> forward(const ParameterSet& params, const CoordinateGrid& grid, int threads = 1);

/// Mean of squared differences over every element.
double mse_loss(std::span<const float> pred, std::span<const float> target);

/// MSE of forward(params, grid) against target and its exact gradient.
/// Reductions run in double over a fixed pixel-block tree.
LossAndGradient loss_and_gradient(const ParameterSet& params, const CoordinateGrid& grid,
                                  std::span<const float> target, int threads = 1);

inline ParameterSet backward(const ParameterSet& params, const CoordinateGrid& grid,
                             std::span<const float> target, int threads = 1) {
    return loss_and_gradient(params, grid, target, threads).gradient;
}

/// One bias-corrected Adam update; step is 1-based.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state,
               const TrainConfig& config, int step);

FitResult fit(const MlpArchitecture& arch, const CoordinateGrid& grid,
              std::span<const float> target, const TrainConfig& config);

/// 10*log10(1/mse); +inf when mse == 0.
double psnr_from_mse(double mse);

} // namespace rinr
