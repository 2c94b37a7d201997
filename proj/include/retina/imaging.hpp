#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace retina {

// Coordinates: x grows rightward, y grows downward, origin at the center of
// the top-left pixel. Angles are counter-clockwise in the mathematical plane,
// i.e. with y negated, so +90 degrees points up the screen.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

// Row-major grid of doubles. Used for gradients, tensor components and
// responses, none of which are bounded to the 8-bit range.
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, double fill = 0.0);
    Grid(int width, int height, std::vector<double> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    double operator()(int x, int y) const { return values_[index(x, y)]; }
    double& operator()(int x, int y) { return values_[index(x, y)]; }

    // Sample with coordinates clamped into the grid (replicated edge).
    double clamped(int x, int y) const;

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool operator==(const Grid&) const = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

// Decoded 8-bit image, 1 (gray) or 3 (RGB) interleaved channels.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> samples;

    bool operator==(const RasterImage&) const = default;
};

// Intensities in [0, 255]. Construction validates the range; the map is
// immutable afterwards.
class IntensityMap {
public:
    IntensityMap() = default;
    IntensityMap(int width, int height, std::vector<double> values);

    int width() const noexcept { return grid_.width(); }
    int height() const noexcept { return grid_.height(); }
    double operator()(int x, int y) const { return grid_(x, y); }
    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return grid_.values(); }

    bool contains(Point p) const noexcept;

    bool operator==(const IntensityMap&) const = default;

private:
    Grid grid_;
};

// Reads P2/P3/P5/P6 portable graymap/pixmap files with maxval 255.
RasterImage load_image(const std::filesystem::path& path);
RasterImage decode_image(std::span<const std::uint8_t> bytes);

// Writes binary P5 (1 channel) or P6 (3 channels).
void save_image(const RasterImage& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_image(const RasterImage& image);

// Green channel for RGB input, the samples themselves for gray input.
IntensityMap to_intensity(const RasterImage& image);

// Quantizes back to 8 bits (round half away from zero) for writing.
RasterImage to_raster(const IntensityMap& map);

// Rotates the content by angle_deg counter-clockwise about center. Each output
// pixel is the bilinear sample of the source at the position rotated by
// -angle_deg; sources outside the map contribute 0.
IntensityMap rotate_about(const IntensityMap& map, Point center, double angle_deg);

}  // namespace retina
