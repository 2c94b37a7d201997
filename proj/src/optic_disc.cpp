#include "retina/optic_disc.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "retina/error.hpp"

namespace retina {

std::string_view to_string(OdSource source) {
    return source == OdSource::detected ? "detected" : "manual";
}

OdSource od_source_from_string(std::string_view text) {
    if (text == "detected") return OdSource::detected;
    if (text == "manual") return OdSource::manual;
    throw Error("unknown optic disc source '" + std::string(text) + "'");
}

void OdParams::validate() const {
    if (template_radius < 4) throw Error("od: template_radius must be >= 4");
    if (search_stride < 1) throw Error("od: search_stride must be >= 1");
    if (margin < template_radius) throw Error("od: margin must be >= template_radius");
}

std::vector<double> od_template(int radius) {
    const int n = 2 * radius + 1;
    const double scale = radius / 2.0;
    const double denom = 2.0 * scale * scale;
    std::vector<double> t(static_cast<std::size_t>(n) * n);
    for (int v = -radius; v <= radius; ++v)
        for (int u = -radius; u <= radius; ++u)
            t[static_cast<std::size_t>(v + radius) * n + (u + radius)] = std::exp(-(u * u + v * v) / denom);
    return t;
}

namespace {

class DiscCorrelator {
public:
    DiscCorrelator(const IntensityMap& map, int radius) : map_(map), radius_(radius), side_(2 * radius + 1) {
        centered_ = od_template(radius);
        double mean = 0.0;
        for (double v : centered_) mean += v;
        mean /= static_cast<double>(centered_.size());
        double ss = 0.0;
        for (double& v : centered_) {
            v -= mean;
            ss += v * v;
        }
        template_norm_ = std::sqrt(ss);
    }

    // Zero-mean NCC of the patch centered on (cx, cy); empty for a flat patch.
    std::optional<double> score(int cx, int cy) const {
        const Grid& g = map_.grid();
        double sum = 0.0;
        for (int v = -radius_; v <= radius_; ++v)
            for (int u = -radius_; u <= radius_; ++u) sum += g(cx + u, cy + v);
        const double mean = sum / static_cast<double>(side_ * side_);

        double dot = 0.0;
        double ss = 0.0;
        std::size_t i = 0;
        for (int v = -radius_; v <= radius_; ++v) {
            for (int u = -radius_; u <= radius_; ++u, ++i) {
                const double d = g(cx + u, cy + v) - mean;
                dot += d * centered_[i];
                ss += d * d;
            }
        }
        // Flat up to rounding noise of the mean.
        if (!(ss > 1e-18 * static_cast<double>(side_ * side_) * (mean * mean + 1.0))) return std::nullopt;
        return std::clamp(dot / (std::sqrt(ss) * template_norm_), -1.0, 1.0);
    }

private:
    const IntensityMap& map_;
    int radius_;
    int side_;
    std::vector<double> centered_;
    double template_norm_ = 0.0;
};

struct Best {
    int x = 0;
    int y = 0;
    double score = 0.0;
    bool found = false;

    // Scanning is in (y, x) order, so strict improvement keeps the
    // lexicographically smallest position among ties.
    void offer(int px, int py, double s) {
        if (!found || s > score || (s == score && (py < y || (py == y && px < x)))) {
            x = px;
            y = py;
            score = s;
            found = true;
        }
    }
};

}  // namespace

OdCenter locate_od(const IntensityMap& map, const OdParams& params) {
    params.validate();
    const int w = map.width();
    const int h = map.height();
    if (w <= 2 * params.margin || h <= 2 * params.margin)
        throw Error("locate_od: map must be larger than 2*margin (" + std::to_string(2 * params.margin) + ")");

    const int lo_x = params.margin;
    const int hi_x = w - 1 - params.margin;
    const int lo_y = params.margin;
    const int hi_y = h - 1 - params.margin;
    const DiscCorrelator corr(map, params.template_radius);

    Best coarse;
    for (int y = lo_y; y <= hi_y; y += params.search_stride)
        for (int x = lo_x; x <= hi_x; x += params.search_stride)
            if (auto s = corr.score(x, y)) coarse.offer(x, y, *s);
    if (!coarse.found) throw Error("no od contrast");

    Best fine = coarse;
    const int s = params.search_stride;
    for (int y = std::max(lo_y, coarse.y - s); y <= std::min(hi_y, coarse.y + s); ++y)
        for (int x = std::max(lo_x, coarse.x - s); x <= std::min(hi_x, coarse.x + s); ++x)
            if (auto sc = corr.score(x, y)) fine.offer(x, y, *sc);

    return {static_cast<double>(fine.x), static_cast<double>(fine.y), fine.score, OdSource::detected};
}

OdCenter manual_od(double x, double y, const IntensityMap& map) {
    if (!map.contains({x, y}))
        throw Error("optic disc center (" + std::to_string(x) + ", " + std::to_string(y) + ") outside the image");
    return {x, y, 1.0, OdSource::manual};
}

}  // namespace retina
