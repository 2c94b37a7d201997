#include "retina/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "retina/error.hpp"

namespace retina {

std::optional<ClassId> ClassId::of_distance(double distance) {
    if (!(distance >= 0.0) || distance >= kMaxDistance) return std::nullopt;
    if (distance < 25.0) return ClassId(1);
    if (distance < 50.0) return ClassId(2);
    return ClassId(3);
}

ClassId ClassId::from_index(int index) {
    if (index < 0 || index >= kClasses) throw Error("class index out of range");
    return ClassId(index + 1);
}

std::optional<ClassId> classify(double distance) { return ClassId::of_distance(distance); }

std::size_t FeatureTemplate::nonzero(int class_index) const {
    const auto& v = (*this)[class_index];
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double a) { return a != 0.0; }));
}

bool FeatureTemplate::is_valid() const {
    for (const auto& v : vectors)
        for (double a : v)
            if (!(a == 0.0 || (a > 0.0 && a <= 360.0))) return false;
    return true;
}

double wrap_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r < 0.0) r += 360.0;
    // A tiny negative input wraps to exactly 360 after the addition.
    if (r >= 360.0) r = 0.0;
    return r;
}

double amplitude_of(double orientation) { return orientation > 0.0 ? orientation : 360.0; }

std::vector<PolarCorner> polarize(std::span<const Corner> corners, const OdCenter& od) {
    std::vector<PolarCorner> out;
    out.reserve(corners.size());
    for (const auto& c : corners) {
        const double dx = c.x - od.x;
        const double dy = c.y - od.y;
        const double dist = std::hypot(dx, dy);
        if (!(dist < kMaxDistance)) continue;
        const double deg = std::atan2(-dy, dx) * 180.0 / std::numbers::pi;
        out.push_back({dist, wrap_degrees(deg), c.response});
    }
    return out;
}

FeatureTemplate encode(std::span<const PolarCorner> corners) {
    std::vector<PolarCorner> order(corners.begin(), corners.end());
    std::sort(order.begin(), order.end(), [](const PolarCorner& p, const PolarCorner& q) {
        if (p.response != q.response) return p.response > q.response;
        if (p.orientation != q.orientation) return p.orientation < q.orientation;
        return p.distance < q.distance;
    });

    FeatureTemplate t;
    for (const auto& pc : order) {
        const auto cls = classify(pc.distance);
        if (!cls) throw Error("encode: corner at distance >= 80");
        if (!(pc.orientation >= 0.0 && pc.orientation < 360.0)) throw Error("encode: orientation outside [0, 360)");
        auto& vec = t[cls->index()];
        const int start = static_cast<int>(std::floor(pc.orientation));
        const double amp = amplitude_of(pc.orientation);
        for (int i = 0; i < cls->pulse_width(); ++i) {
            double& slot = vec[static_cast<std::size_t>((start + i) % kSlots)];
            if (slot == 0.0) slot = amp;
        }
    }
    return t;
}

}  // namespace retina
