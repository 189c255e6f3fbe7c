#include "rinr/scheduler.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <stdexcept>

#include "parallel.hpp"

namespace rinr {

namespace {

template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    // Fisher-Yates with our own index draw so plans match across standard libraries.
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

void push_chunks(const std::vector<std::size_t>& members, std::size_t batch_size,
                 std::vector<std::vector<std::size_t>>& out) {
    for (std::size_t i = 0; i < members.size(); i += batch_size)
        out.emplace_back(members.begin() + static_cast<std::ptrdiff_t>(i),
                         members.begin() + static_cast<std::ptrdiff_t>(std::min(members.size(), i + batch_size)));
}

} // namespace

DecodeJob make_decode_job(std::string image_id, std::shared_ptr<const EncodedImage> encoded) {
    if (!encoded) throw std::invalid_argument("decode job '" + image_id + "' has no encoded image");
    encoded->validate();
    DecodeJob job;
    job.image_id = std::move(image_id);
    job.arch_key = encoded->background.arch.to_string() + "/" +
                   (encoded->mode == ObjectMode::None ? std::string("-") : encoded->object.arch.to_string());
    job.cost = encoded->background.arch.parameter_count() +
               (encoded->mode == ObjectMode::None ? 0 : encoded->object.arch.parameter_count());
    job.encoded = std::move(encoded);
    return job;
}

DecodeJob make_sim_job(std::string image_id, std::string arch_key, std::uint64_t cost) {
    if (cost == 0) throw std::invalid_argument("decode job cost must be positive");
    return {std::move(image_id), nullptr, std::move(arch_key), cost};
}

BatchPlan group_by_arch(const std::vector<DecodeJob>& jobs, std::size_t batch_size, std::uint64_t seed,
                        RemainderPolicy remainder) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::mt19937_64 rng(seed);

    // std::map keeps group iteration independent of hash seeds.
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < jobs.size(); ++i) groups[jobs[i].arch_key].push_back(i);

    BatchPlan plan;
    plan.batch_size = batch_size;
    std::vector<std::size_t> leftovers;
    for (auto& [key, members] : groups) {
        seeded_shuffle(members, rng);
        if (remainder == RemainderPolicy::Merge) {
            const std::size_t full = members.size() / batch_size * batch_size;
            leftovers.insert(leftovers.end(), members.begin() + static_cast<std::ptrdiff_t>(full), members.end());
            members.resize(full);
        }
        push_chunks(members, batch_size, plan.batches);
    }
    if (!leftovers.empty()) {
        std::stable_sort(leftovers.begin(), leftovers.end(), [&](std::size_t a, std::size_t b) {
            if (jobs[a].cost != jobs[b].cost) return jobs[a].cost > jobs[b].cost;
            return jobs[a].arch_key < jobs[b].arch_key;
        });
        push_chunks(leftovers, batch_size, plan.batches);
    }
    seeded_shuffle(plan.batches, rng);
    return plan;
}

BatchPlan ungrouped_plan(const std::vector<DecodeJob>& jobs, std::size_t batch_size, std::uint64_t seed) {
    std::vector<std::size_t> order(jobs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    seeded_shuffle(order, rng);
    return plan_from_order(order, batch_size);
}

BatchPlan plan_from_order(const std::vector<std::size_t>& order, std::size_t batch_size) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    BatchPlan plan;
    plan.batch_size = batch_size;
    push_chunks(order, batch_size, plan.batches);
    return plan;
}

void validate_plan(const BatchPlan& plan, std::size_t job_count) {
    std::vector<int> seen(job_count, 0);
    for (const auto& batch : plan.batches) {
        if (batch.empty() || batch.size() > plan.batch_size)
            throw std::invalid_argument("batch size out of range");
        for (auto i : batch) {
            if (i >= job_count) throw std::invalid_argument("plan references an unknown job");
            ++seen[i];
        }
    }
    if (std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
        throw std::invalid_argument("plan does not cover every job exactly once");
}

void LatencyModel::validate() const {
    if (!(fixed >= 0.0) || !(per_cost > 0.0))
        throw std::invalid_argument("latency model needs fixed >= 0 and per_cost > 0");
}

double batch_latency(const std::vector<std::size_t>& batch, const std::vector<DecodeJob>& jobs,
                     const LatencyModel& model) {
    model.validate();
    if (batch.empty()) throw std::invalid_argument("batch_latency of an empty batch");
    double worst = 0.0;
    for (auto i : batch) worst = std::max(worst, model.time(jobs.at(i).cost));
    return worst;
}

double plan_latency(const BatchPlan& plan, const std::vector<DecodeJob>& jobs, const LatencyModel& model) {
    double total = 0.0;
    for (const auto& batch : plan.batches) total += batch_latency(batch, jobs, model);
    return total;
}

std::vector<Image> decode_batch(const std::vector<DecodeJob>& jobs, int thread_budget) {
    if (thread_budget < 1) throw std::invalid_argument("thread_budget must be >= 1");
    std::vector<Image> out(jobs.size());
    detail::parallel_for(jobs.size(), thread_budget, [&](std::size_t i) {
        const auto& job = jobs[i];
        if (!job.encoded) throw std::invalid_argument(job.image_id + ": job has no resident weights");
        try {
            out[i] = decode(*job.encoded, 1);
        } catch (const std::exception& e) {
            throw std::runtime_error(job.image_id + ": " + e.what());
        }
    });
    return out;
}

} // namespace rinr
