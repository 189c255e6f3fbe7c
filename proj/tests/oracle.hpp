#pragma once

// Test-only reference implementations. Nothing here shares code paths with
// the library kernels they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "rinr/inr.hpp"

namespace rinr::oracle {

/// Straight per-pixel double-precision MLP loss, no chunking or layouts.
inline double reference_loss(const MlpArchitecture& arch, const std::vector<double>& flat,
                             const std::vector<float>& coords, const std::vector<float>& target) {
    const std::size_t n = coords.size() / 2;
    double acc = 0.0;
    std::vector<double> a, z;
    for (std::size_t p = 0; p < n; ++p) {
        a = {coords[2 * p], coords[2 * p + 1]};
        std::size_t k = 0;
        for (int l = 0; l < arch.layer_count; ++l) {
            const int in = l == 0 ? 2 : arch.hidden_dim;
            const int out = l + 1 == arch.layer_count ? 3 : arch.hidden_dim;
            z.assign(static_cast<std::size_t>(out), 0.0);
            for (int o = 0; o < out; ++o)
                for (int i = 0; i < in; ++i) z[o] += flat[k + static_cast<std::size_t>(o * in + i)] * a[i];
            k += static_cast<std::size_t>(in * out);
            for (int o = 0; o < out; ++o) z[o] += flat[k + static_cast<std::size_t>(o)];
            k += static_cast<std::size_t>(out);
            if (l + 1 < arch.layer_count)
                for (auto& v : z) v = std::sin(arch.frequency_scale * v);
            a = z;
        }
        for (int c = 0; c < 3; ++c) {
            const double d = a[c] - target[p * 3 + c];
            acc += d * d;
        }
    }
    return acc / static_cast<double>(n * 3);
}

/// Central finite differences at step h. `fourth_order` switches to the
/// five-point stencil (f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h.
inline std::vector<double> finite_difference_gradient(const ParameterSet& params, const std::vector<float>& coords,
                                                      const std::vector<float>& target, double h,
                                                      bool fourth_order) {
    const auto f32 = params.flatten();
    std::vector<double> flat(f32.begin(), f32.end());
    std::vector<double> grad(flat.size());
    auto loss_at = [&](std::size_t i, double delta) {
        const double saved = flat[i];
        flat[i] = saved + delta;
        const double v = reference_loss(params.arch, flat, coords, target);
        flat[i] = saved;
        return v;
    };
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (fourth_order)
            grad[i] = (loss_at(i, -2 * h) - 8 * loss_at(i, -h) + 8 * loss_at(i, h) - loss_at(i, 2 * h)) / (12 * h);
        else
            grad[i] = (loss_at(i, h) - loss_at(i, -h)) / (2 * h);
    }
    return grad;
}

/// Largest |analytic - fd| / max(|analytic|, |fd|, floor) over all entries.
inline double max_relative_error(const std::vector<float>& analytic, const std::vector<double>& fd,
                                 double floor = 1e-6) {
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
        const double a = analytic[i];
        const double denom = std::max({std::abs(a), std::abs(fd[i]), floor});
        worst = std::max(worst, std::abs(a - fd[i]) / denom);
    }
    return worst;
}

/// Every partition of {0..n-1} into blocks of at most `cap`, as block lists.
inline void for_each_partition(std::size_t n, std::size_t cap,
                               const std::function<void(const std::vector<std::vector<std::size_t>>&)>& fn) {
    std::vector<std::vector<std::size_t>> blocks;
    std::function<void(std::size_t)> rec = [&](std::size_t i) {
        if (i == n) {
            fn(blocks);
            return;
        }
        // index access: the recursion may grow `blocks` and move its storage
        const std::size_t open = blocks.size();
        for (std::size_t k = 0; k < open; ++k) {
            if (blocks[k].size() >= cap) continue;
            blocks[k].push_back(i);
            rec(i + 1);
            blocks[k].pop_back();
        }
        blocks.push_back({i});
        rec(i + 1);
        blocks.pop_back();
    };
    rec(0);
}

} // namespace rinr::oracle
