#pragma once

#include <string_view>
#include <vector>

#include "retina/imaging.hpp"

namespace retina {

enum class OdSource { detected, manual };

std::string_view to_string(OdSource source);
OdSource od_source_from_string(std::string_view text);

// Center of the optic disc, the pole of the polar encoding. A manual center
// always carries score 1.
struct OdCenter {
    double x = 0.0;
    double y = 0.0;
    double score = 1.0;
    OdSource source = OdSource::manual;

    Point position() const { return {x, y}; }
};

struct OdParams {
    int template_radius = 40;
    int search_stride = 4;
    int margin = 40;

    void validate() const;
};

// Bright-disc template exp(-(u^2+v^2) / (2 (radius/2)^2)) on the
// (2*radius+1)^2 square, row-major.
std::vector<double> od_template(int radius);

// Coarse grid search at search_stride over centers at least `margin` from
// every edge, then a stride-1 refinement in a +-search_stride box around the
// coarse winner. Ties go to the smallest (y, x). Throws when the map is too
// small or no candidate patch has contrast.
OdCenter locate_od(const IntensityMap& map, const OdParams& params);

OdCenter manual_od(double x, double y, const IntensityMap& map);

}  // namespace retina
