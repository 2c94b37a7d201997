#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "retina/error.hpp"
#include "retina/imaging.hpp"

using namespace retina;

namespace {

RasterImage decode_text(const std::string& s) {
    std::vector<std::uint8_t> bytes(s.begin(), s.end());
    return decode_image(bytes);
}

std::size_t format_error_offset(const std::string& s) {
    try {
        decode_text(s);
    } catch (const FormatError& e) {
        return e.offset();
    }
    FAIL("expected a FormatError");
    return 0;
}

}  // namespace

TEST_CASE("ascii graymap decodes row-major") {
    const auto img = decode_text("P2 2 2 255\n0 255 128 64\n");
    CHECK(img == RasterImage{2, 2, 1, {0, 255, 128, 64}});
}

TEST_CASE("binary pixmap decodes interleaved RGB") {
    std::string s = "P6 1 1 255\n";
    s += static_cast<char>(10);
    s += static_cast<char>(200);
    s += static_cast<char>(30);
    CHECK(decode_text(s) == RasterImage{1, 1, 3, {10, 200, 30}});
}

TEST_CASE("headers tolerate comments and mixed whitespace") {
    const auto img = decode_text("P3\n# made by hand\n1 1\t# one pixel\n255\n1 2 3\n");
    CHECK(img == RasterImage{1, 1, 3, {1, 2, 3}});
}

TEST_CASE("unsupported or malformed files report byte offsets") {
    CHECK_THROWS_AS(decode_text("P7 1 1 255\n"), FormatError);
    CHECK(format_error_offset("P7 1 1 255\n") == 0);
    CHECK(format_error_offset("P5 2 2 65535\n") == 7);  // 16-bit depth
    CHECK(format_error_offset("P5 2 2 100\n") == 7);
    CHECK_THROWS_WITH_AS(decode_text("P5 2 2 255\nab"), doctest::Contains("truncated"), FormatError);
    CHECK_THROWS_AS(decode_text("P2 2 x 255\n"), FormatError);
    CHECK_THROWS_AS(decode_text("P2 1 1 255\n300\n"), FormatError);
    CHECK_THROWS_AS(decode_text(""), FormatError);
}

TEST_CASE("missing image file is an error") {
    CHECK_THROWS_AS(load_image("/nonexistent/definitely/missing.pgm"), Error);
}

TEST_CASE("binary writer round-trips bit-exactly") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> byte(0, 255);
    const auto dir = std::filesystem::temp_directory_path() / "retina_imaging_test";
    std::filesystem::create_directories(dir);
    for (int channels : {1, 3}) {
        for (int trial = 0; trial < 20; ++trial) {
            RasterImage img{1 + trial % 7, 1 + trial % 5, channels, {}};
            for (int i = 0; i < img.width * img.height * channels; ++i) img.samples.push_back(static_cast<std::uint8_t>(byte(rng)));
            const auto path = dir / ("img" + std::to_string(channels) + "_" + std::to_string(trial) + ".pnm");
            save_image(img, path);
            CHECK(load_image(path) == img);
        }
    }
    const auto header = encode_image(RasterImage{3, 2, 1, std::vector<std::uint8_t>(6, 9)});
    CHECK(std::string(header.begin(), header.begin() + 11) == "P5 3 2 255\n");
}

TEST_CASE("to_intensity picks the green channel") {
    CHECK(to_intensity(RasterImage{1, 1, 3, {10, 200, 30}}).values()[0] == 200.0);
    CHECK(to_intensity(RasterImage{1, 1, 1, {64}}).values()[0] == 64.0);
    const auto m = to_intensity(RasterImage{2, 1, 3, {0, 0, 0, 255, 255, 255}});
    CHECK(m(0, 0) == 0.0);
    CHECK(m(1, 0) == 255.0);
}

TEST_CASE("to_intensity leaves single-channel values unchanged") {
    RasterImage img{4, 3, 1, {}};
    for (int i = 0; i < 12; ++i) img.samples.push_back(static_cast<std::uint8_t>(i * 20));
    const auto once = to_intensity(img);
    CHECK(to_intensity(to_raster(once)) == once);
}

TEST_CASE("intensity map rejects out-of-range values") {
    CHECK_THROWS_AS(IntensityMap(1, 1, {256.0}), Error);
    CHECK_THROWS_AS(IntensityMap(1, 1, {-0.5}), Error);
    CHECK_THROWS_AS(IntensityMap(2, 2, {1.0}), Error);
}

TEST_CASE("rotation by 0 and 360 degrees") {
    std::mt19937_64 rng(11);
    const auto m = fixture::random_map(17, 13, rng);
    CHECK(rotate_about(m, {8.3, 6.1}, 0.0) == m);
    const auto full = rotate_about(m, {8.3, 6.1}, 360.0);
    for (std::size_t i = 0; i < m.values().size(); ++i) CHECK(std::abs(full.values()[i] - m.values()[i]) <= 1e-9);
}

TEST_CASE("quarter turn is counter-clockwise with y up") {
    std::vector<double> v(25, 0.0);
    v[2 * 5 + 4] = 200.0;  // (4, 2)
    const IntensityMap m(5, 5, v);
    const auto rotated = rotate_about(m, {2, 2}, 90);
    const auto expected = oracle::nn_rotate(m.grid(), {2, 2}, 90);
    CHECK(expected(2, 0) == 200.0);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) CHECK(rotated(x, y) == doctest::Approx(expected(x, y)).epsilon(1e-12));
}

TEST_CASE("bilinear rotation moves the mass centroid counter-clockwise") {
    const auto m = fixture::blob(41, 41, 27.0, 18.0, 220.0, 4.0);
    const Point c{20, 20};
    const auto r = rotate_about(m, c, 30.0);
    // Mass centroid moves 30 degrees counter-clockwise.
    double sx = 0, sy = 0, s = 0;
    for (int y = 0; y < 41; ++y)
        for (int x = 0; x < 41; ++x) {
            const double w = r(x, y) - 20.0 > 0 ? r(x, y) - 20.0 : 0.0;
            sx += w * x;
            sy += w * y;
            s += w;
        }
    const double t = 30.0 * std::numbers::pi / 180.0;
    const double ex = 20 + 7 * std::cos(t) - (-(18.0 - 20)) * std::sin(t);
    const double ey = 20 - (7 * std::sin(t) + (-(18.0 - 20)) * std::cos(t));
    CHECK(sx / s == doctest::Approx(ex).epsilon(0.01));
    CHECK(sy / s == doctest::Approx(ey).epsilon(0.01));
}

TEST_CASE("rotating back and forth stays within 1 intensity unit on the inner disc") {
    // Smooth test image: sum of broad Gaussians.
    std::vector<double> v(64 * 64);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const double a = std::exp(-((x - 20.0) * (x - 20.0) + (y - 30.0) * (y - 30.0)) / (2 * 9.0 * 9.0));
            const double b = std::exp(-((x - 45.0) * (x - 45.0) + (y - 40.0) * (y - 40.0)) / (2 * 7.0 * 7.0));
            v[static_cast<std::size_t>(y) * 64 + x] = 30.0 + 150.0 * a + 70.0 * b;
        }
    const IntensityMap m(64, 64, v);
    const Point c{31.5, 31.5};
    const double radius = 64 / 2.0 - 2.0;
    for (double angle : {3.0, 17.5, -12.0, 45.0, 133.0}) {
        const auto back = rotate_about(rotate_about(m, c, angle), c, -angle);
        double worst = 0.0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (std::hypot(x - c.x, y - c.y) <= radius) worst = std::max(worst, std::abs(back(x, y) - m(x, y)));
        CHECK_MESSAGE(worst <= 1.0, "angle " << angle << " worst " << worst);
    }
}
