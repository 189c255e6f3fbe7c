#pragma once

// Batched decoding with architecture grouping. Batch latency follows the
// slowest member, so batches built from same-sized networks avoid paying
// for a large network alongside small ones.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rinr/codec.hpp"

namespace rinr {

struct DecodeJob {
    std::string image_id;
    std::shared_ptr<const EncodedImage> encoded;  // weights already in memory
    std::string arch_key;
    std::uint64_t cost = 0;  // total parameter count
};

/// Key "BGxH/OBJxH" (object part "-" for background-only), cost from both networks.
DecodeJob make_decode_job(std::string image_id, std::shared_ptr<const EncodedImage> encoded);

/// Plan-only job with no weights attached; used for latency simulation.
DecodeJob make_sim_job(std::string image_id, std::string arch_key, std::uint64_t cost);

struct BatchPlan {
    std::vector<std::vector<std::size_t>> batches;  // indices into the job list
    std::size_t batch_size = 1;
};

enum class RemainderPolicy {
    /// A group whose size is not a multiple of batch_size ends in a short batch.
    Undersized,
    /// Leftover jobs of all groups are pooled in descending cost and batched together.
    Merge,
};

/// Groups jobs by arch_key, shuffles within each group and shuffles the
/// emission order of the resulting batches, both driven by `seed`.
BatchPlan group_by_arch(const std::vector<DecodeJob>& jobs, std::size_t batch_size, std::uint64_t seed,
                        RemainderPolicy remainder = RemainderPolicy::Undersized);

/// Random sampling without grouping: one shuffle, then consecutive batches.
BatchPlan ungrouped_plan(const std::vector<DecodeJob>& jobs, std::size_t batch_size, std::uint64_t seed);

/// Consecutive batches of the given job order.
BatchPlan plan_from_order(const std::vector<std::size_t>& order, std::size_t batch_size);

/// Throws std::invalid_argument unless every job appears exactly once and
/// no batch exceeds batch_size.
void validate_plan(const BatchPlan& plan, std::size_t job_count);

struct LatencyModel {
    double fixed = 0.0;     // a
    double per_cost = 1.0;  // b

    double time(std::uint64_t cost) const { return fixed + per_cost * static_cast<double>(cost); }
    void validate() const;
};

double batch_latency(const std::vector<std::size_t>& batch, const std::vector<DecodeJob>& jobs,
                     const LatencyModel& model);
double plan_latency(const BatchPlan& plan, const std::vector<DecodeJob>& jobs, const LatencyModel& model);

/// Decodes every job from memory on up to thread_budget workers. Output
/// order follows the job list; results do not depend on thread_budget.
std::vector<Image> decode_batch(const std::vector<DecodeJob>& jobs, int thread_budget);

} // namespace rinr
