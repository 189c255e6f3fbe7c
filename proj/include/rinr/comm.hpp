#pragma once

// Data-transfer cost of sharing training images across edge devices:
// serverless (every device sends its JPEG payload to each receiver) versus
// fog (chosen devices upload once, the fog node broadcasts the compressed
// network file). All totals are integer byte counts.

#include <cstdint>
#include <string>
#include <vector>

namespace rinr {

struct DeviceProfile {
    std::string id;
    std::uint64_t payload_bytes = 0;   // m_i
    std::uint64_t receiver_count = 0;  // n_i
};

enum class Route { Fog, Direct };

std::string to_string(Route route);

inline constexpr double kDefaultBandwidth = 2'000'000.0;  // bytes per second

struct NetworkPlan {
    double alpha = 1.0;  // compressed size / JPEG size, in (0, 1]
    std::vector<Route> routes;
    double bandwidth_bytes_per_s = kDefaultBandwidth;

    std::size_t fog_count() const;  // k1
    void validate(std::size_t device_count) const;
};

struct DeviceCost {
    Route route = Route::Direct;
    std::uint64_t compressed_bytes = 0;  // ceil(alpha * m_i)
    std::int64_t marginal_saving = 0;    // bytes saved by routing through the fog node
};

struct CommReport {
    std::uint64_t serverless_total = 0;  // D_s
    std::uint64_t fog_total = 0;         // D_f = M1 + M2 + M3
    std::uint64_t fog_broadcast = 0;     // M1
    std::uint64_t fog_upload = 0;        // M2
    std::uint64_t direct = 0;            // M3
    std::int64_t savings = 0;            // D_s - D_f
    double ratio = 1.0;                  // D_s / D_f
    std::vector<DeviceCost> devices;
};

void validate_alpha(double alpha);

/// ceil(alpha * payload) in whole bytes; products within 1e-9 of an integer
/// count as that integer so decimal alphas such as 0.083 do not round up
/// on floating-point noise.
std::uint64_t compressed_bytes(std::uint64_t payload_bytes, double alpha);

/// D_s = sum of n_i * m_i.
std::uint64_t serverless_total(const std::vector<DeviceProfile>& devices);

CommReport fog_total(const std::vector<DeviceProfile>& devices, const NetworkPlan& plan);

/// Fog iff (1 - alpha) * n > 1, i.e. n > 1 / (1 - alpha). Ties go Direct.
Route route_decision(std::uint64_t receiver_count, double alpha);

/// Per-device choice minimizing D_f. The objective is separable, so each
/// device goes Fog exactly when its byte-exact saving
/// n_i * (m_i - ceil(alpha * m_i)) - m_i is positive.
NetworkPlan optimize_routes(const std::vector<DeviceProfile>& devices, double alpha,
                            double bandwidth_bytes_per_s = kDefaultBandwidth);

/// Sum over Fog devices of m_i * ((1 - alpha) * n_i - 1), with alpha * m_i
/// taken at its byte-rounded value; equals D_s - D_f exactly.
std::int64_t savings(const std::vector<DeviceProfile>& devices, const NetworkPlan& plan);

enum class TrainingSite { Edge, FogNode };

std::string to_string(TrainingSite site);

/// Edge iff the training data to move is smaller than twice the model size
/// (model out and back); ties stay at the edge.
TrainingSite training_location(std::uint64_t transfer_bytes_for_training, std::uint64_t model_bytes);

double transfer_time(std::uint64_t bytes, double bandwidth_bytes_per_s = kDefaultBandwidth);
inline double transfer_time(std::uint64_t bytes, const NetworkPlan& plan) {
    return transfer_time(bytes, plan.bandwidth_bytes_per_s);
}

} // namespace rinr
