#include "retina/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "retina/error.hpp"

namespace retina {

Grid::Grid(int width, int height, double fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)), fill) {
    if (width < 0 || height < 0) throw Error("grid dimensions must be non-negative");
}

Grid::Grid(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0) throw Error("grid dimensions must be non-negative");
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw Error("grid value count does not match dimensions");
}

double Grid::clamped(int x, int y) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return (*this)(x, y);
}

IntensityMap::IntensityMap(int width, int height, std::vector<double> values)
    : grid_(width, height, std::move(values)) {
    if (width < 1 || height < 1) throw Error("intensity map must be at least 1x1");
    for (double v : grid_.values()) {
        if (!(v >= 0.0 && v <= 255.0)) throw Error("intensity outside [0, 255]");
    }
}

bool IntensityMap::contains(Point p) const noexcept {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width() - 1 && p.y <= height() - 1;
}

namespace {

class PnmReader {
public:
    explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    bool at_end() const { return pos_ >= bytes_.size(); }

    void skip_space_and_comments() {
        while (!at_end()) {
            auto c = bytes_[pos_];
            if (c == '#') {
                while (!at_end() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    unsigned long read_uint(const char* what) {
        skip_space_and_comments();
        std::size_t start = pos_;
        unsigned long value = 0;
        while (!at_end() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1u << 30) throw FormatError(std::string(what) + " too large", start);
            ++pos_;
        }
        if (pos_ == start) {
            if (at_end()) throw FormatError(std::string("unexpected end of file reading ") + what, pos_);
            throw FormatError(std::string("expected ") + what, pos_);
        }
        if (!at_end() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
            throw FormatError(std::string("malformed ") + what, pos_);
        return value;
    }

    std::uint8_t byte() { return bytes_[pos_++]; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("not a portable anymap (missing 'P' magic)", 0);
    int channels = 0;
    bool binary = false;
    switch (bytes[1]) {
        case '2': channels = 1; break;
        case '3': channels = 3; break;
        case '5': channels = 1; binary = true; break;
        case '6': channels = 3; binary = true; break;
        default:
            throw FormatError(std::string("unsupported magic 'P") + static_cast<char>(bytes[1]) + "'", 0);
    }

    PnmReader in(bytes.subspan(2));
    const std::size_t base = 2;
    auto offset = [&] { return base + in.pos(); };

    auto width = in.read_uint("width");
    auto height = in.read_uint("height");
    in.skip_space_and_comments();
    std::size_t maxval_at = offset();
    auto maxval = in.read_uint("maxval");
    if (width == 0 || height == 0) throw FormatError("zero image dimension", maxval_at);
    if (maxval > 255) throw FormatError("unsupported bit depth (maxval " + std::to_string(maxval) + ")", maxval_at);
    if (maxval != 255) throw FormatError("maxval must be 255, got " + std::to_string(maxval), maxval_at);

    RasterImage img;
    img.width = static_cast<int>(width);
    img.height = static_cast<int>(height);
    img.channels = channels;
    const std::size_t count = width * height * static_cast<std::size_t>(channels);
    img.samples.reserve(count);

    if (binary) {
        // Exactly one whitespace byte separates the header from the raster.
        if (in.at_end() || !std::isspace(in.byte())) throw FormatError("missing raster separator", offset());
        if (in.remaining() < count)
            throw FormatError("truncated raster: expected " + std::to_string(count) + " bytes", offset() + in.remaining());
        for (std::size_t i = 0; i < count; ++i) img.samples.push_back(in.byte());
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t at = offset();
            auto v = in.read_uint("sample");
            if (v > 255) throw FormatError("sample exceeds maxval", at);
            img.samples.push_back(static_cast<std::uint8_t>(v));
        }
    }
    return img;
}

RasterImage load_image(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open image '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    if (file.bad()) throw Error("cannot read image '" + path.string() + "'");
    try {
        return decode_image(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what(), e.offset());
    }
}

std::vector<std::uint8_t> encode_image(const RasterImage& image) {
    if (image.channels != 1 && image.channels != 3) throw Error("image must have 1 or 3 channels");
    if (image.width < 1 || image.height < 1) throw Error("image must be at least 1x1");
    const auto expected = static_cast<std::size_t>(image.width) * image.height * image.channels;
    if (image.samples.size() != expected) throw Error("sample count does not match dimensions");

    std::string header = std::string(image.channels == 1 ? "P5" : "P6") + " " + std::to_string(image.width) + " " +
                         std::to_string(image.height) + " 255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.samples.begin(), image.samples.end());
    return out;
}

void save_image(const RasterImage& image, const std::filesystem::path& path) {
    auto bytes = encode_image(image);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open '" + path.string() + "' for writing");
    file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw Error("failed writing '" + path.string() + "'");
}

IntensityMap to_intensity(const RasterImage& image) {
    const auto n = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height);
    if (image.samples.size() != n * static_cast<std::size_t>(image.channels))
        throw Error("sample count does not match dimensions");
    std::vector<double> values(n);
    const std::size_t stride = static_cast<std::size_t>(image.channels);
    const std::size_t pick = image.channels == 3 ? 1 : 0;
    for (std::size_t i = 0; i < n; ++i) values[i] = image.samples[i * stride + pick];
    return IntensityMap(image.width, image.height, std::move(values));
}

RasterImage to_raster(const IntensityMap& map) {
    RasterImage img{map.width(), map.height(), 1, {}};
    img.samples.reserve(map.values().size());
    for (double v : map.values()) img.samples.push_back(static_cast<std::uint8_t>(std::lround(v)));
    return img;
}

IntensityMap rotate_about(const IntensityMap& map, Point center, double angle_deg) {
    double a = std::fmod(angle_deg, 360.0);
    if (a < 0) a += 360.0;

    double c = 0.0;
    double s = 0.0;
    // Quarter turns get exact coefficients so lossless cases stay lossless.
    if (a == 0.0) {
        c = 1.0;
    } else if (a == 90.0) {
        s = 1.0;
    } else if (a == 180.0) {
        c = -1.0;
    } else if (a == 270.0) {
        s = -1.0;
    } else {
        const double r = a * std::numbers::pi / 180.0;
        c = std::cos(r);
        s = std::sin(r);
    }

    const int w = map.width();
    const int h = map.height();
    const Grid& src = map.grid();
    auto at = [&](int x, int y) { return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : src(x, y); };

    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        const double dy = y - center.y;
        for (int x = 0; x < w; ++x) {
            const double dx = x - center.x;
            // Inverse map (rotation by -a on the y-up plane), written as an
            // offset from (x, y) so the identity rotation samples exactly.
            const double sx = x + (dx * (c - 1.0) - dy * s);
            const double sy = y + (dx * s + dy * (c - 1.0));
            const double fx0 = std::floor(sx);
            const double fy0 = std::floor(sy);
            const double fx = sx - fx0;
            const double fy = sy - fy0;
            const int x0 = static_cast<int>(fx0);
            const int y0 = static_cast<int>(fy0);
            double v = (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + (fx == 0.0 ? 0.0 : fx * at(x0 + 1, y0)));
            if (fy != 0.0) v += fy * ((1.0 - fx) * at(x0, y0 + 1) + (fx == 0.0 ? 0.0 : fx * at(x0 + 1, y0 + 1)));
            out[static_cast<std::size_t>(y) * w + x] = std::clamp(v, 0.0, 255.0);
        }
    }
    return IntensityMap(w, h, std::move(out));
}

}  // namespace retina
