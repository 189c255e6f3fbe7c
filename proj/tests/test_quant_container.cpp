#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>

#include "rinr/container.hpp"
#include "rinr/error.hpp"
#include "rinr/quant.hpp"

using namespace rinr;

namespace {

std::vector<float> random_tensor(std::size_t n, std::mt19937_64& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> u(lo, hi);
    std::vector<float> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

ParameterSet random_params(const MlpArchitecture& arch, std::uint64_t seed) {
    auto p = init_parameters(arch, seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<float> u(-0.3f, 0.3f);
    for (auto& l : p.layers)
        for (auto& b : l.bias) b = u(rng);
    return p;
}

EncodedImage sample_encoded(ObjectMode mode, std::uint64_t seed = 1) {
    EncodedImage e;
    e.width = 64;
    e.height = 48;
    e.bbox = {5, 6, 20, 20};
    e.mode = mode;
    e.background = random_params(make_arch(4, 12), seed);
    if (mode != ObjectMode::None) e.object = random_params(make_arch(3, 10), seed + 7);
    return e;
}

std::size_t layer_tensor_bytes(const MlpArchitecture& a, int bits) {
    // hand count: per layer a weight record and a bias record
    std::size_t total = 0;
    int in = 2;
    for (int l = 0; l < a.layer_count; ++l) {
        const int out = l + 1 == a.layer_count ? 3 : a.hidden_dim;
        total += 9 + static_cast<std::size_t>(in * out) * (bits / 8);
        total += 9 + static_cast<std::size_t>(out) * (bits / 8);
        in = out;
    }
    return total;
}

ContainerError::Kind parse_kind(const std::vector<std::uint8_t>& bytes) {
    try {
        parse_container(bytes);
    } catch (const ContainerError& e) {
        return e.kind();
    }
    FAIL("parse unexpectedly succeeded");
    return ContainerError::Kind::Malformed;
}

std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
    return b[at] | (b[at + 1] << 8) | (b[at + 2] << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

} // namespace

TEST_CASE("quantize endpoint and degenerate examples") {
    const std::vector<float> v = {-0.5f, 0.25f, 1.5f};
    for (int bits : {8, 16}) {
        const auto q = quantize(v, bits);
        CHECK(q.min_val == -0.5f);
        CHECK(q.max_val == 1.5f);
        CHECK(q.codes[0] == 0);
        CHECK(q.codes[2] == (1u << bits) - 1);
        const auto back = dequantize(q);
        CHECK(back[0] == -0.5f);
        CHECK(back[2] == 1.5f);
    }
    const std::vector<float> flat(17, 0.3f);
    const auto q = quantize(flat, 8);
    CHECK(q.min_val == 0.3f);
    CHECK(q.max_val == 0.3f);
    for (auto c : q.codes) CHECK(c == 0);
    for (float x : dequantize(q)) CHECK(x == 0.3f);
}

TEST_CASE("halfway codes round away from zero") {
    const std::vector<float> v = {0.0f, 0.5f, 1.0f};
    CHECK(quantize(v, 8).codes[1] == 128);  // 127.5 -> 128
    CHECK(quantize(v, 16).codes[1] == 32768);  // 32767.5 -> 32768
}

TEST_CASE("quantize rejects bad input") {
    CHECK_THROWS(quantize(std::vector<float>{}, 8));
    CHECK_THROWS(quantize(std::vector<float>{1.0f, NAN}, 8));
    CHECK_THROWS(quantize(std::vector<float>{1.0f, INFINITY}, 16));
    CHECK_THROWS(quantize(std::vector<float>{1.0f}, 12));
    QuantizedTensor q = quantize(std::vector<float>{0.0f, 1.0f}, 8);
    q.codes[1] = 256;
    CHECK_THROWS(dequantize(q));
}

TEST_CASE("16-bit half step over [-1, 1]") {
    const std::vector<float> v = {-1.0f, 1.0f};
    const auto q = quantize(v, 16);
    CHECK(q.step() / 2 == doctest::Approx(1.0 / 65535.0));
    CHECK(q.step() / 2 == doctest::Approx(1.53e-5).epsilon(1e-3));
}

TEST_CASE("dequantization error never exceeds half a step") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 400; ++trial) {
        const int bits = trial % 2 ? 16 : 8;
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 600)(rng);
        const float scale = std::pow(10.0f, std::uniform_real_distribution<float>(-4, 2)(rng));
        const float shift = std::uniform_real_distribution<float>(-1, 1)(rng) * scale;
        const auto v = random_tensor(n, rng, shift - scale, shift + scale);
        const auto q = quantize(v, bits);
        const auto back = dequantize_wide(q);
        const double half = q.step() / 2;
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(back[i] - v[i]) - half);
        CHECK(worst <= 1e-12 * scale);
        for (auto c : q.codes) CHECK(c <= q.max_code());
    }
}

TEST_CASE("container size matches a hand count") {
    // DAC-SDC default: 10x30 at 8 bits plus 5x24 at 16 bits
    const std::size_t expected = 55 + (20 * 9 + 7623) + (10 * 9 + 1947 * 2) + 4;
    CHECK(expected == 11846);
    CHECK(container_size(make_arch(10, 30), 8, make_arch(5, 24), 16) == expected);

    for (auto [bg, obj] : {std::pair{make_arch(4, 12), make_arch(3, 10)}, std::pair{make_arch(10, 36), make_arch(6, 28)}}) {
        CHECK(container_size(bg, 8, obj, 16) == 55 + layer_tensor_bytes(bg, 8) + layer_tensor_bytes(obj, 16) + 4);
        CHECK(container_size(bg, 16, std::nullopt, 16) == 55 + layer_tensor_bytes(bg, 16) + 4);
    }
}

TEST_CASE("packed files have the predicted size") {
    for (auto mode : {ObjectMode::Residual, ObjectMode::Direct, ObjectMode::None}) {
        const auto e = sample_encoded(mode);
        const auto bytes = pack(e);
        const std::optional<MlpArchitecture> obj =
            mode == ObjectMode::None ? std::nullopt : std::optional{e.object.arch};
        CHECK(bytes.size() == container_size(e.background.arch, 8, obj, 16));
    }
}

TEST_CASE("region-aware files are smaller than a 16-bit single-network file") {
    for (const auto& cfg : dataset_configs()) {
        const auto ours = container_size(cfg.background, 8, cfg.object_candidates.back(), 16);
        const auto single = container_size(cfg.single_inr_baseline, 16, std::nullopt, 16);
        INFO(cfg.name << ": " << ours << " vs " << single);
        CHECK(ours < single);
    }
}

TEST_CASE("header layout") {
    auto e = sample_encoded(ObjectMode::Direct);
    e.background.arch.frequency_scale = 30.0f;
    const auto b = pack(e);
    CHECK(std::memcmp(b.data(), "RINR", 4) == 0);
    CHECK(b[4] == 1);
    CHECK(b[5] == 0);
    CHECK(read_u32(b, 6) == 64);
    CHECK(read_u32(b, 10) == 48);
    CHECK(read_u32(b, 14) == 5);
    CHECK(read_u32(b, 18) == 6);
    CHECK(read_u32(b, 22) == 20);
    CHECK(read_u32(b, 26) == 20);
    CHECK(b[30] == 1);
    CHECK(read_u32(b, 31) == 4);
    CHECK(read_u32(b, 35) == 12);
    float w0;
    std::memcpy(&w0, b.data() + 39, 4);
    CHECK(w0 == 30.0f);
    CHECK(read_u32(b, 43) == 3);
    CHECK(read_u32(b, 47) == 10);
    CHECK(b[55] == 8);   // first background record
    const std::size_t obj_start = 55 + layer_tensor_bytes(make_arch(4, 12), 8);
    CHECK(b[obj_start] == 16);
    // trailing CRC covers everything before it
    const std::uint32_t stored = read_u32(b, b.size() - 4);
    CHECK(stored == crc32(std::span(b.data(), b.size() - 4)));
}

TEST_CASE("crc32 reference value") {
    const std::string s = "123456789";
    CHECK(crc32(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())) == 0xCBF43926u);
}

TEST_CASE("pack and unpack round trip") {
    for (auto mode : {ObjectMode::Residual, ObjectMode::Direct, ObjectMode::None}) {
        const auto e = sample_encoded(mode, 3);
        const auto bytes = pack(e);
        CHECK(pack(e) == bytes);  // deterministic
        const auto q = parse_container(bytes);
        CHECK(q == quantize_image(e));
        CHECK(serialize(q) == bytes);

        const auto back = unpack(bytes);
        CHECK(back.width == e.width);
        CHECK(back.height == e.height);
        CHECK(back.bbox == e.bbox);
        CHECK(back.mode == e.mode);
        CHECK(back.background.arch == e.background.arch);
        auto within = [](const ParameterSet& orig, const ParameterSet& deq, int bits) {
            const auto a = orig.flatten();
            const auto b = deq.flatten();
            REQUIRE(a.size() == b.size());
            std::size_t k = 0;
            for (const auto& l : orig.layers)
                for (const auto* t : {&l.weight, &l.bias}) {
                    const auto [lo, hi] = std::minmax_element(t->begin(), t->end());
                    const double half = (static_cast<double>(*hi) - *lo) / ((1u << bits) - 1) / 2;
                    for (std::size_t i = 0; i < t->size(); ++i, ++k)
                        CHECK(std::abs(static_cast<double>(a[k]) - b[k]) <= half * (1 + 1e-6) + 1e-7);
                }
        };
        within(e.background, back.background, 8);
        if (mode != ObjectMode::None) {
            CHECK(back.object.arch == e.object.arch);
            within(e.object, back.object, 16);
        }
    }
}

TEST_CASE("custom policy and baseline policy") {
    const auto e = sample_encoded(ObjectMode::None);
    const auto bytes = pack(e, kBaselinePolicy);
    CHECK(bytes.size() == container_size(e.background.arch, 16, std::nullopt, 16));
    CHECK(parse_container(bytes).background.tensors[0].bits == 16);
}

TEST_CASE("distinct error kinds") {
    const auto good = pack(sample_encoded(ObjectMode::Residual));
    using K = ContainerError::Kind;

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK(parse_kind(bad_magic) == K::BadMagic);

    auto bad_version = good;
    bad_version[4] = 2;
    CHECK(parse_kind(bad_version) == K::BadVersion);

    auto bad_payload = good;
    bad_payload[200] ^= 0x01;
    CHECK(parse_kind(bad_payload) == K::BadCrc);

    auto bad_crc = good;
    bad_crc.back() ^= 0x80;
    CHECK(parse_kind(bad_crc) == K::BadCrc);

    for (std::size_t cut : {std::size_t{10}, std::size_t{54}, std::size_t{56}, good.size() / 2, good.size() - 1}) {
        const std::vector<std::uint8_t> t(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
        INFO("cut at " << cut);
        CHECK(parse_kind(t) == K::Truncated);
    }

    auto trailing = good;
    trailing.push_back(0);
    CHECK(parse_kind(trailing) == K::Malformed);

    auto bad_mode = good;
    bad_mode[30] = 7;
    CHECK(parse_kind(bad_mode) == K::Malformed);

    CHECK(parse_kind({}) == K::Truncated);
}

TEST_CASE("every single-byte corruption is detected") {
    const auto good = pack(sample_encoded(ObjectMode::Residual, 9));
    std::mt19937_64 rng(77);
    int detected = 0;
    const int trials = 3000;
    for (int i = 0; i < trials; ++i) {
        auto b = good;
        const std::size_t at = std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng);
        const auto flip = static_cast<std::uint8_t>(std::uniform_int_distribution<int>(1, 255)(rng));
        b[at] ^= flip;
        try {
            parse_container(b);
        } catch (const ContainerError&) {
            ++detected;
        }
    }
    CHECK(detected == trials);
}

TEST_CASE("quantized network shape checks") {
    const auto p = random_params(make_arch(3, 5), 1);
    auto q = quantize_network(p, 8);
    CHECK(q.tensors.size() == 6);
    CHECK(dequantize_network(q).arch == p.arch);
    q.tensors.pop_back();
    CHECK_THROWS_AS(dequantize_network(q), ShapeError);
}
