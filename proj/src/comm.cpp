#include "rinr/comm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rinr {

namespace {

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("byte count overflow");
    return r;
}

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
    std::uint64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("byte count overflow");
    return r;
}

std::int64_t signed_diff(std::uint64_t a, std::uint64_t b) {
    constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
    if (a >= b) {
        if (a - b > kMax) throw std::overflow_error("byte count overflow");
        return static_cast<std::int64_t>(a - b);
    }
    if (b - a > kMax) throw std::overflow_error("byte count overflow");
    return -static_cast<std::int64_t>(b - a);
}

// Fog cost minus direct cost for one device, negated: positive means the fog hop pays off.
std::int64_t device_saving(const DeviceProfile& d, std::uint64_t compressed) {
    const std::uint64_t direct = mul(d.receiver_count, d.payload_bytes);
    const std::uint64_t fog = add(mul(d.receiver_count, compressed), d.payload_bytes);
    return signed_diff(direct, fog);
}

} // namespace

std::string to_string(Route route) { return route == Route::Fog ? "fog" : "direct"; }

std::string to_string(TrainingSite site) { return site == TrainingSite::Edge ? "edge" : "fog"; }

std::size_t NetworkPlan::fog_count() const {
    std::size_t k = 0;
    for (auto r : routes) k += r == Route::Fog;
    return k;
}

void validate_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("alpha must lie in (0, 1], got " + std::to_string(alpha));
}

void NetworkPlan::validate(std::size_t device_count) const {
    validate_alpha(alpha);
    if (routes.size() != device_count) throw std::invalid_argument("every device needs a route");
    if (!(bandwidth_bytes_per_s > 0.0) || !std::isfinite(bandwidth_bytes_per_s))
        throw std::invalid_argument("bandwidth must be positive");
}

std::uint64_t compressed_bytes(std::uint64_t payload_bytes, double alpha) {
    validate_alpha(alpha);
    const double exact = alpha * static_cast<double>(payload_bytes);
    const double nearest = std::round(exact);
    // a few ulps of slack so 0.1 * 1000 stays 100
    if (std::abs(exact - nearest) <= 8 * std::numeric_limits<double>::epsilon() * std::max(1.0, exact)) return static_cast<std::uint64_t>(nearest);
    return static_cast<std::uint64_t>(std::ceil(exact));
}

std::uint64_t serverless_total(const std::vector<DeviceProfile>& devices) {
    std::uint64_t total = 0;
    for (const auto& d : devices) total = add(total, mul(d.receiver_count, d.payload_bytes));
    return total;
}

CommReport fog_total(const std::vector<DeviceProfile>& devices, const NetworkPlan& plan) {
    plan.validate(devices.size());
    CommReport rep;
    rep.devices.resize(devices.size());
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const auto& d = devices[i];
        auto& cost = rep.devices[i];
        cost.route = plan.routes[i];
        cost.compressed_bytes = compressed_bytes(d.payload_bytes, plan.alpha);
        cost.marginal_saving = device_saving(d, cost.compressed_bytes);
        if (cost.route == Route::Fog) {
            rep.fog_broadcast = add(rep.fog_broadcast, mul(d.receiver_count, cost.compressed_bytes));
            rep.fog_upload = add(rep.fog_upload, d.payload_bytes);
        } else {
            rep.direct = add(rep.direct, mul(d.receiver_count, d.payload_bytes));
        }
    }
    rep.serverless_total = serverless_total(devices);
    rep.fog_total = add(add(rep.fog_broadcast, rep.fog_upload), rep.direct);
    rep.savings = signed_diff(rep.serverless_total, rep.fog_total);
    if (rep.fog_total == 0)
        rep.ratio = rep.serverless_total == 0 ? 1.0 : std::numeric_limits<double>::infinity();
    else
        rep.ratio = static_cast<double>(rep.serverless_total) / static_cast<double>(rep.fog_total);
    return rep;
}

Route route_decision(std::uint64_t receiver_count, double alpha) {
    validate_alpha(alpha);
    const double n = static_cast<double>(receiver_count);
    const double margin = (1.0 - alpha) * n - 1.0;
    // Exact ties such as alpha = 0.8, n = 5 can land a few ulps either side of zero.
    return margin > 1e-12 * std::max(1.0, n) ? Route::Fog : Route::Direct;
}

NetworkPlan optimize_routes(const std::vector<DeviceProfile>& devices, double alpha,
                            double bandwidth_bytes_per_s) {
    validate_alpha(alpha);
    NetworkPlan plan;
    plan.alpha = alpha;
    plan.bandwidth_bytes_per_s = bandwidth_bytes_per_s;
    plan.routes.reserve(devices.size());
    for (const auto& d : devices)
        plan.routes.push_back(device_saving(d, compressed_bytes(d.payload_bytes, alpha)) > 0 ? Route::Fog
                                                                                             : Route::Direct);
    plan.validate(devices.size());
    return plan;
}

std::int64_t savings(const std::vector<DeviceProfile>& devices, const NetworkPlan& plan) {
    plan.validate(devices.size());
    std::int64_t total = 0;
    for (std::size_t i = 0; i < devices.size(); ++i) {
        if (plan.routes[i] != Route::Fog) continue;
        const auto& d = devices[i];
        // m * ((1 - alpha) * n - 1) = n * (m - alpha*m) - m
        const auto s = device_saving(d, compressed_bytes(d.payload_bytes, plan.alpha));
        if (__builtin_add_overflow(total, s, &total)) throw std::overflow_error("byte count overflow");
    }
    return total;
}

TrainingSite training_location(std::uint64_t transfer_bytes_for_training, std::uint64_t model_bytes) {
    return transfer_bytes_for_training <= mul(2, model_bytes) ? TrainingSite::Edge : TrainingSite::FogNode;
}

double transfer_time(std::uint64_t bytes, double bandwidth_bytes_per_s) {
    if (!(bandwidth_bytes_per_s > 0.0) || !std::isfinite(bandwidth_bytes_per_s))
        throw std::invalid_argument("bandwidth must be positive");
    return static_cast<double>(bytes) / bandwidth_bytes_per_s;
}

} // namespace rinr
