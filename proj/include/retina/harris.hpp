#pragma once

#include <vector>

#include "retina/imaging.hpp"

namespace retina {

// Fixed convention that gives the threshold its meaning: 8-bit intensities,
// (-1, 0, 1) gradient kernel with no 1/2 factor, unnormalized Gaussian window.
struct HarrisParams {
    double k = 0.17;
    double threshold = 7e4;
    double sigma = 1.5;
    int window_radius = 4;
    int nms_radius = 3;
    int border_margin = 5;

    // Throws retina::Error naming the first violated constraint.
    void validate() const;
};

struct Gradients {
    Grid gx;
    Grid gy;
};

// Per-pixel entries of the smoothed second-moment matrix [[a, c], [c, b]].
struct StructureTensorField {
    Grid a;
    Grid b;
    Grid c;
};

using ResponseMap = Grid;

struct Corner {
    int x = 0;
    int y = 0;
    double response = 0.0;

    bool operator==(const Corner&) const = default;
};

// Central differences, replicated edge. Requires at least 3x3.
Gradients gradients(const IntensityMap& map);

// Unnormalized Gaussian weights on the (2r+1)^2 square, row-major.
std::vector<double> gaussian_window(double sigma, int radius);

StructureTensorField structure_tensor(const Grid& gx, const Grid& gy, const HarrisParams& params);

// R = (ab - c^2) - k (a + b)^2 per pixel.
ResponseMap response(const StructureTensorField& t, double k);

// Thresholded non-maximum suppression. A pixel survives when it reaches the
// threshold and beats every pixel within Chebyshev distance nms_radius; among
// equal values only the smallest (y, x) survives. Pixels inside the
// border_margin frame are never reported. Sorted by descending response,
// then ascending (y, x).
std::vector<Corner> local_maxima(const ResponseMap& r, const HarrisParams& params);

std::vector<Corner> detect_corners(const IntensityMap& map, const HarrisParams& params);

}  // namespace retina
