#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "retina/encoder.hpp"
#include "retina/imaging.hpp"

namespace fixture {

inline retina::IntensityMap constant(int w, int h, double v) {
    return retina::IntensityMap(w, h, std::vector<double>(static_cast<std::size_t>(w) * h, v));
}

// 64x64, a 20x20 square of 235 (pixels 22..41) on a ground of 20.
inline retina::IntensityMap bright_square() {
    std::vector<double> v(64 * 64, 20.0);
    for (int y = 22; y < 42; ++y)
        for (int x = 22; x < 42; ++x) v[static_cast<std::size_t>(y) * 64 + x] = 235.0;
    return retina::IntensityMap(64, 64, std::move(v));
}

// Three 3-px-wide bright bars at 90, 210 and 330 degrees meeting at (32, 32).
inline retina::IntensityMap y_junction() {
    std::vector<double> v(64 * 64, 20.0);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (double ang : {90.0, 210.0, 330.0}) {
                const double t = ang * std::numbers::pi / 180.0;
                const double dx = x - 32.0;
                const double dy = -(y - 32.0);
                const double along = dx * std::cos(t) + dy * std::sin(t);
                const double perp = -dx * std::sin(t) + dy * std::cos(t);
                if (along >= 0 && along <= 28 && std::abs(perp) <= 1.5) v[static_cast<std::size_t>(y) * 64 + x] = 235.0;
            }
    return retina::IntensityMap(64, 64, std::move(v));
}

// Dark field of `ground` with a Gaussian blob of the given peak and scale.
inline retina::IntensityMap blob(int w, int h, double cx, double cy, double peak, double scale, double ground = 20.0) {
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            v[static_cast<std::size_t>(y) * w + x] = ground + (peak - ground) * std::exp(-r2 / (2 * scale * scale));
        }
    return retina::IntensityMap(w, h, std::move(v));
}

inline retina::IntensityMap random_map(int w, int h, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 255.0);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) x = u(rng);
    return retina::IntensityMap(w, h, std::move(v));
}

// Random polar corners with distinct responses.
inline std::vector<retina::PolarCorner> random_polar(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> dist(0.0, 79.999);
    std::uniform_real_distribution<double> ori(0.0, 360.0);
    std::uniform_real_distribution<double> resp(7e4, 7e5);
    std::vector<retina::PolarCorner> out;
    for (int i = 0; i < n; ++i) out.push_back({dist(rng), ori(rng), resp(rng)});
    return out;
}

// Random class vector with roughly `density` of the slots set.
inline retina::ClassVector random_vector(std::mt19937_64& rng, double density) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> amp(0.0, 360.0);
    retina::ClassVector v{};
    for (auto& a : v)
        if (u(rng) < density) a = 360.0 - amp(rng);  // (0, 360]
    return v;
}

}  // namespace fixture
