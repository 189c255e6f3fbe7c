#pragma once

// Synthetic test scenes: a smooth background with a textured square object.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "rinr/image.hpp"

namespace rinr::scenes {

struct Scene {
    Image image;
    BoundingBox box;
};

inline Scene make_scene(std::uint64_t seed, int side = 48, int object = 24) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double base[3] = {0.2 + 0.4 * u(rng), 0.2 + 0.4 * u(rng), 0.2 + 0.4 * u(rng)};
    const double gx[3] = {0.3 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5)};
    const double gy[3] = {0.3 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5), 0.3 * (u(rng) - 0.5)};
    const double wave = 1.0 + 2.0 * u(rng);

    Scene s;
    s.image = Image(side, side);
    std::uniform_int_distribution<int> pos(0, side - object);
    s.box = {pos(rng), pos(rng), object, object};

    // object: coloured tint plus a diagonal grating and a finer cross pattern
    const double tint[3] = {u(rng), u(rng), u(rng)};
    const double f1 = 0.6 + 0.4 * u(rng), f2 = 1.2 + 0.6 * u(rng);
    const double phase = 6.283185307179586 * u(rng);

    for (int row = 0; row < side; ++row)
        for (int col = 0; col < side; ++col) {
            const double x = col / double(side - 1), y = row / double(side - 1);
            for (int c = 0; c < 3; ++c) {
                double v = base[c] + gx[c] * (x - 0.5) + gy[c] * (y - 0.5) +
                           0.08 * std::sin(wave * 3.0 * x + c) * std::cos(wave * 2.0 * y);
                if (s.box.contains(col, row)) {
                    const double i = col - s.box.x, j = row - s.box.y;
                    const double t = 0.25 * std::sin(f1 * (i + j) + phase + c) +
                                     0.12 * std::sin(f2 * i) * std::sin(f2 * j);
                    v = 0.5 * v + 0.5 * tint[c] + t;
                }
                s.image.at(col, row, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    return s;
}

} // namespace rinr::scenes
