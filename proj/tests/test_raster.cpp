#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "coc/error.hpp"
#include "coc/image_io.hpp"
#include "coc/raster.hpp"
#include "coc/rng.hpp"

using namespace coc;
namespace fs = std::filesystem;

namespace {

// Independent containment oracle: test every pixel center directly.
BitMask brute_force_disk(const Circle& c, int w, int h) {
    BitMask m = BitMask::make(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            m.set(x, y, (x - c.cx) * (x - c.cx) + (y - c.cy) * (y - c.cy) <= c.r * c.r);
    return m;
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "coc_raster_tests";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("rasterize_circle: tiny radius sets only the center pixel") {
    const BitMask m = rasterize_circle({2, 2, 0.4}, 5, 5);
    CHECK(m.count() == 1);
    CHECK(m.get(2, 2));
}

TEST_CASE("rasterize_circle: circle fully outside the image is empty") {
    const BitMask m = rasterize_circle({100, 100, 5}, 16, 16);
    CHECK(m.count() == 0);
}

TEST_CASE("rasterize_circle: pixel count approximates the disk area") {
    const BitMask m = rasterize_circle({8, 8, 4}, 16, 16);
    const BitMask oracle = brute_force_disk({8, 8, 4}, 16, 16);
    CHECK(m.bits == oracle.bits);
    CHECK(std::abs(static_cast<double>(m.count()) - 3.14159265358979 * 16.0) <= 6.0);
}

TEST_CASE("rasterize_circle: non-positive radius rejected") {
    CHECK_THROWS_AS(rasterize_circle({4, 4, 0.0}, 8, 8), Error);
    try {
        rasterize_circle({4, 4, -1.0}, 8, 8);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == errc::invalid_geometry);
    }
}

TEST_CASE("rasterize_circle: translation equivariance on integer shifts") {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const double cx = 20 + 24 * rng.next_double();
        const double cy = 20 + 24 * rng.next_double();
        const double r = 2 + 8 * rng.next_double();
        const int dx = static_cast<int>(rng.next_below(7)) - 3;
        const int dy = static_cast<int>(rng.next_below(7)) - 3;
        const BitMask a = rasterize_circle({cx, cy, r}, 64, 64);
        const BitMask b = rasterize_circle({cx + dx, cy + dy, r}, 64, 64);
        for (int y = 16; y < 48; ++y)
            for (int x = 16; x < 48; ++x)
                CHECK(a.get(x, y) == b.get(x + dx, y + dy));
    }
}

TEST_CASE("annulus_mask: degenerate annulus rejected") {
    try {
        annulus_mask({8, 8, 5}, {8, 8, 5}, 16, 16);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == errc::invalid_geometry);
    }
}

TEST_CASE("annulus_mask: near-zero inner radius removes just the center pixel") {
    const BitMask disk = rasterize_circle({8, 8, 6}, 16, 16);
    const BitMask ann = annulus_mask({8, 8, 6}, {8, 8, 0.0001}, 16, 16);
    CHECK(ann.count() == disk.count() - 1);
    CHECK_FALSE(ann.get(8, 8));
}

TEST_CASE("annulus_mask: concentric ring area") {
    const BitMask ann = annulus_mask({8, 8, 6}, {8, 8, 3}, 16, 16);
    const BitMask outer = brute_force_disk({8, 8, 6}, 16, 16);
    const BitMask inner = brute_force_disk({8, 8, 3}, 16, 16);
    CHECK(ann.count() == outer.count() - inner.count());
    CHECK(std::abs(static_cast<double>(ann.count()) - 3.14159265358979 * 27.0) <= 8.0);
}

TEST_CASE("annulus_mask: disjoint from the inner disk") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const double cx = 24 + 16 * rng.next_double();
        const double cy = 24 + 16 * rng.next_double();
        const double ro = 6 + 10 * rng.next_double();
        const double ri = 0.5 + 0.8 * (ro - 1);
        const BitMask ann = annulus_mask({cx, cy, ro}, {cx, cy, ri}, 64, 64);
        const BitMask inner = rasterize_circle({cx, cy, ri}, 64, 64);
        CHECK(mask_and(ann, inner).count() == 0);
    }
}

TEST_CASE("RasterImage entry validation") {
    RasterImage ok = RasterImage::make(16, 16, 1, 0.5);
    CHECK_NOTHROW(ok.validate_entry());

    RasterImage small = RasterImage::make(16, 15, 1, 0.5);
    CHECK_THROWS_AS(small.validate_entry(), Error);

    RasterImage bad = RasterImage::make(16, 16, 1, 0.5);
    bad.at(3, 3) = 1.5;
    CHECK_THROWS_AS(bad.validate_entry(), Error);
}

TEST_CASE("polygon area of a sampled circle approaches pi r^2") {
    const Contour c = circle_contour({10, 12, 9}, 256);
    const double area = polygon_signed_area(c);
    CHECK(area > 0.0); // the generated winding is the positive orientation
    CHECK(std::abs(area - 3.14159265358979 * 81.0) < 0.1);
}

TEST_CASE("PNG round trip preserves 8-bit images") {
    const fs::path dir = temp_dir();
    Rng rng(5);
    RasterImage img = RasterImage::make(24, 17, 3);
    for (double& v : img.data) v = std::round(rng.next_double() * 255.0) / 255.0;
    const fs::path p = dir / "roundtrip.png";
    save_png(p, img);
    const RasterImage back = load_image(p);
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    REQUIRE(back.channels == 3);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-12));
}

TEST_CASE("gray PNG and PGM/PPM round trips") {
    const fs::path dir = temp_dir();
    Rng rng(6);
    RasterImage gray = RasterImage::make(19, 21, 1);
    for (double& v : gray.data) v = std::round(rng.next_double() * 255.0) / 255.0;

    save_png(dir / "g.png", gray);
    CHECK(load_image(dir / "g.png").data == gray.data);

    save_pnm(dir / "g.pgm", gray);
    const RasterImage back = load_image(dir / "g.pgm");
    CHECK(back.channels == 1);
    CHECK(back.data == gray.data);

    RasterImage rgb = RasterImage::make(9, 7, 3);
    for (double& v : rgb.data) v = std::round(rng.next_double() * 255.0) / 255.0;
    save_pnm(dir / "c.ppm", rgb);
    CHECK(load_image(dir / "c.ppm").data == rgb.data);
}

TEST_CASE("mask PNG round trip is exact") {
    const fs::path dir = temp_dir();
    const BitMask m = rasterize_circle({10, 9, 6.5}, 24, 20);
    save_mask_png(dir / "m.png", m);
    const BitMask back = load_mask_png(dir / "m.png");
    CHECK(back.bits == m.bits);
}
