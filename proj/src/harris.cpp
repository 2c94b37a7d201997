#include "retina/harris.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "retina/error.hpp"

namespace retina {

void HarrisParams::validate() const {
    if (!(k > 0.0)) throw Error("harris: k must be > 0");
    if (!(threshold >= 0.0)) throw Error("harris: threshold must be >= 0");
    if (!(sigma > 0.0)) throw Error("harris: sigma must be > 0");
    if (window_radius < 1) throw Error("harris: window_radius must be >= 1");
    if (nms_radius < 1) throw Error("harris: nms_radius must be >= 1");
    if (border_margin < window_radius + 1) throw Error("harris: border_margin must be >= window_radius + 1");
}

Gradients gradients(const IntensityMap& map) {
    const int w = map.width();
    const int h = map.height();
    if (w < 3 || h < 3) throw Error("gradients: map must be at least 3x3");
    const Grid& g = map.grid();
    Gradients out{Grid(w, h), Grid(w, h)};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out.gx(x, y) = g.clamped(x + 1, y) - g.clamped(x - 1, y);
            out.gy(x, y) = g.clamped(x, y + 1) - g.clamped(x, y - 1);
        }
    }
    return out;
}

std::vector<double> gaussian_window(double sigma, int radius) {
    const int n = 2 * radius + 1;
    std::vector<double> w(static_cast<std::size_t>(n) * n);
    const double denom = 2.0 * sigma * sigma;
    for (int v = -radius; v <= radius; ++v)
        for (int u = -radius; u <= radius; ++u)
            w[static_cast<std::size_t>(v + radius) * n + (u + radius)] = std::exp(-(u * u + v * v) / denom);
    return w;
}

namespace {

// Separable form of the window: exp(-(u^2+v^2)/2s^2) = g(u) g(v).
std::vector<double> gaussian_taps(double sigma, int radius) {
    std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
    const double denom = 2.0 * sigma * sigma;
    for (int u = -radius; u <= radius; ++u) taps[static_cast<std::size_t>(u + radius)] = std::exp(-(u * u) / denom);
    return taps;
}

Grid smooth(const Grid& in, const std::vector<double>& taps, int radius) {
    const int w = in.width();
    const int h = in.height();
    Grid rows(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int u = -radius; u <= radius; ++u) acc += taps[static_cast<std::size_t>(u + radius)] * in.clamped(x + u, y);
            rows(x, y) = acc;
        }
    }
    Grid out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int v = -radius; v <= radius; ++v) acc += taps[static_cast<std::size_t>(v + radius)] * rows.clamped(x, y + v);
            out(x, y) = acc;
        }
    }
    return out;
}

}  // namespace

StructureTensorField structure_tensor(const Grid& gx, const Grid& gy, const HarrisParams& params) {
    if (gx.width() != gy.width() || gx.height() != gy.height())
        throw Error("structure_tensor: gradient grids differ in shape");
    if (!(params.sigma > 0.0) || params.window_radius < 1) throw Error("structure_tensor: invalid window");
    const int w = gx.width();
    const int h = gx.height();
    Grid xx(w, h), yy(w, h), xy(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double dx = gx(x, y);
            const double dy = gy(x, y);
            xx(x, y) = dx * dx;
            yy(x, y) = dy * dy;
            xy(x, y) = dx * dy;
        }
    }
    const auto taps = gaussian_taps(params.sigma, params.window_radius);
    return {smooth(xx, taps, params.window_radius), smooth(yy, taps, params.window_radius),
            smooth(xy, taps, params.window_radius)};
}

ResponseMap response(const StructureTensorField& t, double k) {
    const int w = t.a.width();
    const int h = t.a.height();
    ResponseMap r(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double a = t.a(x, y);
            const double b = t.b(x, y);
            const double c = t.c(x, y);
            const double tr = a + b;
            r(x, y) = (a * b - c * c) - k * tr * tr;
        }
    }
    return r;
}

std::vector<Corner> local_maxima(const ResponseMap& r, const HarrisParams& params) {
    const int w = r.width();
    const int h = r.height();
    const int m = params.border_margin;
    const int rad = params.nms_radius;
    std::vector<Corner> out;
    for (int y = m; y < h - m; ++y) {
        for (int x = m; x < w - m; ++x) {
            const double v = r(x, y);
            if (!(v >= params.threshold)) continue;
            bool keep = true;
            for (int ny = std::max(0, y - rad); keep && ny <= std::min(h - 1, y + rad); ++ny) {
                for (int nx = std::max(0, x - rad); nx <= std::min(w - 1, x + rad); ++nx) {
                    if (nx == x && ny == y) continue;
                    const double n = r(nx, ny);
                    // Ties go to the lexicographically smallest (y, x).
                    if (n > v || (n == v && (ny < y || (ny == y && nx < x)))) {
                        keep = false;
                        break;
                    }
                }
            }
            if (keep) out.push_back({x, y, v});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Corner& p, const Corner& q) { return p.response > q.response; });
    return out;
}

std::vector<Corner> detect_corners(const IntensityMap& map, const HarrisParams& params) {
    params.validate();
    const int min_side = 2 * params.border_margin + 3;
    if (map.width() < min_side || map.height() < min_side)
        throw Error("detect_corners: map smaller than " + std::to_string(min_side) + "x" + std::to_string(min_side));
    const auto g = gradients(map);
    return local_maxima(response(structure_tensor(g.gx, g.gy, params), params.k), params);
}

}  // namespace retina
