#include "rinr/inr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "parallel.hpp"
#include "sincos.hpp"
#include "rinr/error.hpp"

namespace rinr {

namespace {

// Pixels per evaluation chunk, and chunks per reduction block. Both are
// fixed so the summation tree never depends on the thread count.
constexpr std::size_t kChunk = 256;
constexpr std::size_t kChunksPerBlock = 4;
constexpr std::size_t kBlock = kChunk * kChunksPerBlock;

// Dot product with four interleaved accumulators combined in a fixed order.
double dot(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t p = 0;
    for (; p + 4 <= n; p += 4) {
        acc0 += a[p] * b[p];
        acc1 += a[p + 1] * b[p + 1];
        acc2 += a[p + 2] * b[p + 2];
        acc3 += a[p + 3] * b[p + 3];
    }
    double s = (acc0 + acc1) + (acc2 + acc3);
    for (; p < n; ++p) s += a[p] * b[p];
    return s;
}

double sum(const double* a, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t p = 0;
    for (; p + 4 <= n; p += 4) {
        acc0 += a[p];
        acc1 += a[p + 1];
        acc2 += a[p + 2];
        acc3 += a[p + 3];
    }
    double s = (acc0 + acc1) + (acc2 + acc3);
    for (; p < n; ++p) s += a[p];
    return s;
}

struct WideLayer {
    int in_dim;
    int out_dim;
    std::vector<double> weight;
    std::vector<double> bias;
};

std::vector<WideLayer> widen(const ParameterSet& params) {
    std::vector<WideLayer> out;
    out.reserve(params.layers.size());
    for (const auto& l : params.layers) {
        out.push_back({l.in_dim, l.out_dim, {l.weight.begin(), l.weight.end()},
                       {l.bias.begin(), l.bias.end()}});
    }
    return out;
}

// Activations of one chunk, stored feature-major (feature x pixel).
struct ChunkState {
    std::size_t n = 0;
    std::vector<std::vector<double>> acts;    // acts[0] = input, acts[l+1] = output of layer l
    std::vector<std::vector<double>> slopes;  // d(activation)/d(pre-activation) per hidden layer
};

void evaluate_chunk(const std::vector<WideLayer>& layers, double omega, const float* coords,
                    std::size_t n, ChunkState& st, bool training) {
    const std::size_t count = layers.size();
    st.n = n;
    st.acts.resize(count + 1);
    st.slopes.resize(count);

    auto& in = st.acts[0];
    in.assign(2 * n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        in[p] = coords[2 * p];
        in[n + p] = coords[2 * p + 1];
    }

    for (std::size_t l = 0; l < count; ++l) {
        const auto& layer = layers[l];
        const auto& prev = st.acts[l];
        auto& z = st.acts[l + 1];
        z.assign(static_cast<std::size_t>(layer.out_dim) * n, 0.0);
        for (int o = 0; o < layer.out_dim; ++o) {
            double* row = z.data() + static_cast<std::size_t>(o) * n;
            const double b = layer.bias[o];
            for (std::size_t p = 0; p < n; ++p) row[p] = b;
            for (int i = 0; i < layer.in_dim; ++i) {
                const double w = layer.weight[static_cast<std::size_t>(o) * layer.in_dim + i];
                const double* src = prev.data() + static_cast<std::size_t>(i) * n;
                for (std::size_t p = 0; p < n; ++p) row[p] += w * src[p];
            }
        }
        if (training) {
            for (double v : z)
                if (!std::isfinite(v))
                    throw NumericError("non-finite pre-activation in layer " + std::to_string(l));
        }
        if (l + 1 < count) {
            if (training) {
                auto& slope = st.slopes[l];
                slope.resize(z.size());
                for (std::size_t k = 0; k < z.size(); ++k) {
                    double sv, cv;
                    detail::sincos(omega * z[k], sv, cv);
                    z[k] = sv;
                    slope[k] = omega * cv;
                }
            } else {
                for (auto& v : z) v = detail::sin(omega * v);
            }
        }
    }
}

void check_grid(const CoordinateGrid& grid) {
    if (grid.coords.size() % 2 != 0) throw ShapeError("coordinate list has odd length");
    if (grid.size() == 0) throw ShapeError("coordinate grid is empty");
}

} // namespace

// ---------------------------------------------------------------------------
// MlpArchitecture

void MlpArchitecture::validate() const {
    if (layer_count < 2)
        throw std::invalid_argument("layer_count must be >= 2, got " + std::to_string(layer_count));
    if (hidden_dim < 1)
        throw std::invalid_argument("hidden_dim must be >= 1, got " + std::to_string(hidden_dim));
    if (input_dim != 2) throw std::invalid_argument("input_dim must be 2");
    if (output_dim != 3) throw std::invalid_argument("output_dim must be 3");
    if (!(frequency_scale > 0.0f) || !std::isfinite(frequency_scale))
        throw std::invalid_argument("frequency_scale must be positive and finite");
}

std::size_t MlpArchitecture::parameter_count() const {
    const std::size_t h = static_cast<std::size_t>(hidden_dim);
    return (input_dim + 1) * h + static_cast<std::size_t>(layer_count - 2) * (h + 1) * h +
           (h + 1) * static_cast<std::size_t>(output_dim);
}

std::size_t parameter_count(const MlpArchitecture& arch) {
    arch.validate();
    return arch.parameter_count();
}

std::string MlpArchitecture::to_string() const {
    return std::to_string(layer_count) + "x" + std::to_string(hidden_dim);
}

MlpArchitecture MlpArchitecture::parse(std::string_view text) {
    const auto sep = text.find_first_of("xX");
    if (sep == std::string_view::npos)
        throw std::invalid_argument("architecture must look like LxH, got '" + std::string(text) + "'");
    auto to_int = [&](std::string_view s) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
            throw std::invalid_argument("bad integer '" + std::string(s) + "' in architecture '" +
                                        std::string(text) + "'");
        return v;
    };
    MlpArchitecture a = make_arch(to_int(text.substr(0, sep)), to_int(text.substr(sep + 1)));
    a.validate();
    return a;
}

// ---------------------------------------------------------------------------
// ParameterSet

std::size_t ParameterSet::size() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
}

void ParameterSet::validate() const {
    arch.validate();
    if (layers.size() != static_cast<std::size_t>(arch.layer_count))
        throw ShapeError("expected " + std::to_string(arch.layer_count) + " layers, got " +
                         std::to_string(layers.size()));
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        const int want_in = l == 0 ? arch.input_dim : arch.hidden_dim;
        const int want_out = l + 1 == layers.size() ? arch.output_dim : arch.hidden_dim;
        if (layer.in_dim != want_in || layer.out_dim != want_out ||
            layer.weight.size() != static_cast<std::size_t>(want_in) * want_out ||
            layer.bias.size() != static_cast<std::size_t>(want_out))
            throw ShapeError("layer " + std::to_string(l) + " does not match architecture " +
                             arch.to_string());
    }
}

std::vector<float> ParameterSet::flatten() const {
    std::vector<float> out;
    out.reserve(size());
    for (const auto& l : layers) {
        out.insert(out.end(), l.weight.begin(), l.weight.end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

void ParameterSet::assign_flat(std::span<const float> values) {
    if (values.size() != size())
        throw ShapeError("flat parameter vector has " + std::to_string(values.size()) +
                         " values, expected " + std::to_string(size()));
    auto it = values.begin();
    for (auto& l : layers) {
        std::copy_n(it, l.weight.size(), l.weight.begin());
        it += static_cast<std::ptrdiff_t>(l.weight.size());
        std::copy_n(it, l.bias.size(), l.bias.begin());
        it += static_cast<std::ptrdiff_t>(l.bias.size());
    }
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (!(a.arch == b.arch) || a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        const auto& x = a.layers[l];
        const auto& y = b.layers[l];
        if (x.in_dim != y.in_dim || x.out_dim != y.out_dim || x.weight != y.weight || x.bias != y.bias)
            return false;
    }
    return true;
}

ParameterSet zero_parameters(const MlpArchitecture& arch) {
    arch.validate();
    ParameterSet ps;
    ps.arch = arch;
    ps.layers.resize(static_cast<std::size_t>(arch.layer_count));
    for (int l = 0; l < arch.layer_count; ++l) {
        auto& layer = ps.layers[static_cast<std::size_t>(l)];
        layer.in_dim = l == 0 ? arch.input_dim : arch.hidden_dim;
        layer.out_dim = l + 1 == arch.layer_count ? arch.output_dim : arch.hidden_dim;
        layer.weight.assign(static_cast<std::size_t>(layer.in_dim) * layer.out_dim, 0.0f);
        layer.bias.assign(static_cast<std::size_t>(layer.out_dim), 0.0f);
    }
    return ps;
}

// ---------------------------------------------------------------------------
// Grid and config

CoordinateGrid CoordinateGrid::make(int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("grid dimensions must be >= 1");
    auto norm = [](int i, int extent) {
        return extent == 1 ? 0.0f : static_cast<float>(2.0 * i / (extent - 1) - 1.0);
    };
    CoordinateGrid g;
    g.width = width;
    g.height = height;
    g.coords.resize(static_cast<std::size_t>(width) * height * 2);
    std::size_t k = 0;
    for (int row = 0; row < height; ++row) {
        const float y = norm(row, height);
        for (int col = 0; col < width; ++col) {
            g.coords[k++] = norm(col, width);
            g.coords[k++] = y;
        }
    }
    return g;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
    if (steps < 0) throw std::invalid_argument("steps must be >= 0");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

AdamState AdamState::zeros(const ParameterSet& params) {
    return {std::vector<double>(params.size(), 0.0), std::vector<double>(params.size(), 0.0)};
}

// ---------------------------------------------------------------------------
// Operations

ParameterSet init_parameters(const MlpArchitecture& arch, std::uint64_t seed) {
    ParameterSet ps = zero_parameters(arch);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < ps.layers.size(); ++l) {
        auto& layer = ps.layers[l];
        const double fan_in = layer.in_dim;
        const double bound =
            l == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / arch.frequency_scale;
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& w : layer.weight) {
            // float rounding may step just past the bound; keep the contract exact
            w = std::clamp(static_cast<float>(dist(rng)), static_cast<float>(-bound),
                           static_cast<float>(bound));
            if (std::abs(static_cast<double>(w)) > bound)
                w = std::nextafter(w, 0.0f);
        }
    }
    return ps;
}

std::vector<float> forward(const ParameterSet& params, const CoordinateGrid& grid, int threads) {
    params.validate();
    check_grid(grid);
    const auto layers = widen(params);
    const double omega = params.arch.frequency_scale;
    const std::size_t n = grid.size();
    std::vector<float> out(n * 3);
    const std::size_t chunks = (n + kChunk - 1) / kChunk;

    detail::parallel_for(chunks, threads, [&](std::size_t c) {
        const std::size_t p0 = c * kChunk;
        const std::size_t len = std::min(kChunk, n - p0);
        ChunkState st;
        evaluate_chunk(layers, omega, grid.coords.data() + 2 * p0, len, st, false);
        const auto& z = st.acts.back();
        for (std::size_t p = 0; p < len; ++p)
            for (int ch = 0; ch < 3; ++ch)
                out[(p0 + p) * 3 + ch] = static_cast<float>(z[static_cast<std::size_t>(ch) * len + p]);
    });
    return out;
}

double mse_loss(std::span<const float> pred, std::span<const float> target) {
    if (pred.size() != target.size())
        throw ShapeError("mse_loss: prediction has " + std::to_string(pred.size()) +
                         " values, target has " + std::to_string(target.size()));
    if (pred.empty()) throw ShapeError("mse_loss: empty tensors");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

LossAndGradient loss_and_gradient(const ParameterSet& params, const CoordinateGrid& grid,
                                  std::span<const float> target, int threads) {
    params.validate();
    check_grid(grid);
    const std::size_t n = grid.size();
    if (target.size() != n * 3)
        throw ShapeError("target has " + std::to_string(target.size()) + " values, grid needs " +
                         std::to_string(n * 3));

    const auto layers = widen(params);
    const double omega = params.arch.frequency_scale;
    const std::size_t total = params.size();
    const double scale = 2.0 / static_cast<double>(n * 3);
    const std::size_t blocks = (n + kBlock - 1) / kBlock;

    // Per-block accumulators: flat gradient followed by the squared-error sum.
    std::vector<std::vector<double>> partial(blocks);

    detail::parallel_for(blocks, threads, [&](std::size_t b) {
        auto& acc = partial[b];
        acc.assign(total + 1, 0.0);
        ChunkState st;
        std::vector<double> g, g_prev, chunk_grad(total);
        const std::size_t block_end = std::min(n, (b + 1) * kBlock);

        for (std::size_t p0 = b * kBlock; p0 < block_end; p0 += kChunk) {
            const std::size_t len = std::min(kChunk, block_end - p0);
            evaluate_chunk(layers, omega, grid.coords.data() + 2 * p0, len, st, true);

            const auto& out = st.acts.back();
            g.assign(3 * len, 0.0);
            for (int ch = 0; ch < 3; ++ch)
                for (std::size_t p = 0; p < len; ++p) {
                    const std::size_t k = static_cast<std::size_t>(ch) * len + p;
                    g[k] = out[k] - static_cast<double>(target[(p0 + p) * 3 + ch]);
                }
            const double sq = dot(g.data(), g.data(), g.size());
            for (auto& v : g) v *= scale;

            // Walk layers backwards; offsets index the flat gradient.
            std::size_t offset = total;
            for (std::size_t li = layers.size(); li-- > 0;) {
                const auto& layer = layers[li];
                const auto& prev = st.acts[li];
                const std::size_t wsize = static_cast<std::size_t>(layer.out_dim) * layer.in_dim;
                offset -= wsize + static_cast<std::size_t>(layer.out_dim);
                double* dw = chunk_grad.data() + offset;
                double* db = dw + wsize;
                for (int o = 0; o < layer.out_dim; ++o) {
                    const double* go = g.data() + static_cast<std::size_t>(o) * len;
                    for (int i = 0; i < layer.in_dim; ++i)
                        dw[static_cast<std::size_t>(o) * layer.in_dim + i] =
                            dot(go, prev.data() + static_cast<std::size_t>(i) * len, len);
                    db[o] = sum(go, len);
                }
                if (li == 0) break;

                g_prev.assign(static_cast<std::size_t>(layer.in_dim) * len, 0.0);
                for (int o = 0; o < layer.out_dim; ++o) {
                    const double* go = g.data() + static_cast<std::size_t>(o) * len;
                    for (int i = 0; i < layer.in_dim; ++i) {
                        const double w = layer.weight[static_cast<std::size_t>(o) * layer.in_dim + i];
                        double* dst = g_prev.data() + static_cast<std::size_t>(i) * len;
                        for (std::size_t p = 0; p < len; ++p) dst[p] += w * go[p];
                    }
                }
                const auto& slope = st.slopes[li - 1];
                for (std::size_t k = 0; k < g_prev.size(); ++k) g_prev[k] *= slope[k];
                std::swap(g, g_prev);
            }

            for (std::size_t k = 0; k < total; ++k) acc[k] += chunk_grad[k];
            acc[total] += sq;
        }
    });

    std::vector<double> grad(total + 1, 0.0);
    for (const auto& acc : partial)
        for (std::size_t k = 0; k <= total; ++k) grad[k] += acc[k];

    LossAndGradient result;
    result.loss = grad[total] / static_cast<double>(n * 3);
    if (!std::isfinite(result.loss)) throw NumericError("non-finite loss");
    result.gradient = zero_parameters(params.arch);
    std::size_t k = 0;
    for (std::size_t li = 0; li < result.gradient.layers.size(); ++li) {
        auto& layer = result.gradient.layers[li];
        for (auto& w : layer.weight) w = static_cast<float>(grad[k++]);
        for (auto& b : layer.bias) b = static_cast<float>(grad[k++]);
    }
    for (std::size_t li = 0; li < result.gradient.layers.size(); ++li) {
        const auto& layer = result.gradient.layers[li];
        auto bad = [](float v) { return !std::isfinite(v); };
        if (std::any_of(layer.weight.begin(), layer.weight.end(), bad) ||
            std::any_of(layer.bias.begin(), layer.bias.end(), bad))
            throw NumericError("non-finite gradient in layer " + std::to_string(li));
    }
    return result;
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state,
               const TrainConfig& config, int step) {
    if (step < 1) throw std::invalid_argument("adam_step: step index must be >= 1");
    config.validate();
    params.validate();
    grads.validate();
    if (!(params.arch == grads.arch)) throw ShapeError("adam_step: gradient architecture differs");
    const std::size_t total = params.size();
    if (state.first_moment.size() != total || state.second_moment.size() != total)
        throw ShapeError("adam_step: optimizer state does not match parameters");

    const double c1 = 1.0 - std::pow(config.beta1, step);
    const double c2 = 1.0 - std::pow(config.beta2, step);
    std::size_t k = 0;
    auto update = [&](std::vector<float>& p, const std::vector<float>& g) {
        for (std::size_t i = 0; i < p.size(); ++i, ++k) {
            const double gi = g[i];
            double& m = state.first_moment[k];
            double& v = state.second_moment[k];
            m = config.beta1 * m + (1.0 - config.beta1) * gi;
            v = config.beta2 * v + (1.0 - config.beta2) * gi * gi;
            const double m_hat = m / c1;
            const double v_hat = v / c2;
            p[i] = static_cast<float>(p[i] - config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        update(params.layers[l].weight, grads.layers[l].weight);
        update(params.layers[l].bias, grads.layers[l].bias);
    }
    for (const auto& l : params.layers) {
        auto bad = [](float v) { return !std::isfinite(v); };
        if (std::any_of(l.weight.begin(), l.weight.end(), bad) ||
            std::any_of(l.bias.begin(), l.bias.end(), bad))
            throw NumericError("adam_step produced non-finite parameters");
    }
}

FitResult fit(const MlpArchitecture& arch, const CoordinateGrid& grid,
              std::span<const float> target, const TrainConfig& config) {
    arch.validate();
    config.validate();
    check_grid(grid);
    if (target.size() != grid.size() * 3)
        throw ShapeError("fit: target size does not match grid");

    const auto start = std::chrono::steady_clock::now();
    FitResult res{init_parameters(arch, config.seed), {}};
    AdamState state = AdamState::zeros(res.params);
    res.report.loss_trace.reserve(static_cast<std::size_t>(config.steps));

    ParameterSet best;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_step = 0;
    for (int t = 1; t <= config.steps; ++t) {
        LossAndGradient lg;
        try {
            lg = loss_and_gradient(res.params, grid, target, config.threads);
            if (config.keep_best && lg.loss < best_loss) {
                best = res.params;
                best_loss = lg.loss;
                best_step = t - 1;
            }
            adam_step(res.params, lg.gradient, state, config, t);
        } catch (const NumericError& e) {
            throw NumericError("fit aborted at step " + std::to_string(t) + ": " + e.what());
        }
        res.report.loss_trace.push_back(lg.loss);
    }
    res.report.steps_run = config.steps;
    res.report.returned_step = config.steps;
    if (config.keep_best && config.steps > 0) {
        const double last = loss_and_gradient(res.params, grid, target, config.threads).loss;
        if (best_loss < last) {
            res.params = std::move(best);
            res.report.returned_step = best_step;
        }
    }

    auto pred = forward(res.params, grid, config.threads);
    res.report.final_mse = mse_loss(pred, target);
    for (auto& v : pred) v = std::clamp(v, 0.0f, 1.0f);
    res.report.final_psnr_db = psnr_from_mse(mse_loss(pred, target));
    res.report.wall_time = std::chrono::steady_clock::now() - start;
    return res;
}

double psnr_from_mse(double mse) {
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace rinr
