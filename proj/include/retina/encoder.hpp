#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "retina/harris.hpp"
#include "retina/optic_disc.hpp"

namespace retina {

inline constexpr int kSlots = 360;
inline constexpr int kClasses = 3;
// Corners at or beyond this distance from the disc center are ignored.
inline constexpr double kMaxDistance = 80.0;

struct PolarCorner {
    double distance = 0.0;     // pixels from the disc center
    double orientation = 0.0;  // degrees in [0, 360), counter-clockwise, y up
    double response = 0.0;

    bool operator==(const PolarCorner&) const = default;
};

// Distance ring 1, 2 or 3: [0, 25), [25, 50), [50, 80).
class ClassId {
public:
    static std::optional<ClassId> of_distance(double distance);
    static ClassId from_index(int index);  // 0-based

    int value() const noexcept { return value_; }        // 1..3
    int index() const noexcept { return value_ - 1; }    // 0..2
    int pulse_width() const noexcept { return value_ + 1; }

    bool operator==(const ClassId&) const = default;

private:
    explicit ClassId(int value) : value_(value) {}
    int value_;
};

std::optional<ClassId> classify(double distance);

using ClassVector = std::array<double, kSlots>;

// Three 360-slot pulse vectors, one per distance ring. A slot is 0 when empty
// and otherwise holds an orientation in (0, 360]; orientation 0 is stored as 360.
struct FeatureTemplate {
    std::array<ClassVector, kClasses> vectors{};

    const ClassVector& operator[](int class_index) const { return vectors[static_cast<std::size_t>(class_index)]; }
    ClassVector& operator[](int class_index) { return vectors[static_cast<std::size_t>(class_index)]; }

    std::size_t nonzero(int class_index) const;
    bool is_valid() const;

    bool operator==(const FeatureTemplate&) const = default;
};

// Reduces any finite angle into [0, 360).
double wrap_degrees(double deg);

// Amplitude written for an orientation: the orientation itself, or 360 for 0.
double amplitude_of(double orientation);

// Distance and orientation of each corner relative to the disc center; corners
// at distance >= 80 are dropped.
std::vector<PolarCorner> polarize(std::span<const Corner> corners, const OdCenter& od);

// Paints one pulse per corner, strongest response first. A pulse starts at
// floor(orientation), is 2/3/4 slots wide by class, wraps modulo 360 and never
// overwrites a slot that is already set.
FeatureTemplate encode(std::span<const PolarCorner> corners);

}  // namespace retina
