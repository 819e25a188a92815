#include <doctest.h>

#include <bit>
#include <cmath>
#include <set>

#include "coc/error.hpp"
#include "coc/features.hpp"
#include "coc/rng.hpp"
#include "coc/synthdata.hpp"

using namespace coc;
using namespace coc::feat;

namespace {

/// Segmentation assembled from explicit circles, bypassing the snake.
seg::Segmentation make_seg(const Circle& outer, const Circle& nucleus, int w, int h) {
    seg::Segmentation s;
    s.outer = outer;
    s.nucleus = nucleus;
    s.outer_mask = rasterize_circle(outer, w, h);
    s.nucleus_mask = mask_and(rasterize_circle(nucleus, w, h), s.outer_mask);
    s.snake_contour = circle_contour(outer, 64);
    s.converged = true;
    s.iterations_used = 1;
    return s;
}

RasterImage random_image(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    RasterImage img = RasterImage::make(w, h, 1);
    for (double& v : img.data) v = rng.next_double();
    return img;
}

} // namespace

TEST_CASE("feature layout: 31 entries, contour then texture") {
    const auto& table = feature_layout();
    REQUIRE(table.size() == 31);
    std::set<std::string> names;
    for (int i = 0; i < 31; ++i) {
        names.insert(table[i].name);
        if (i < 15)
            CHECK(table[i].group == FeatureGroup::contour);
        else
            CHECK(table[i].group == FeatureGroup::texture);
    }
    CHECK(names.size() == 31);
}

TEST_CASE("contour_features: concentric geometry") {
    const RasterImage img = RasterImage::make(256, 256, 1, 0.5);
    const auto s = make_seg({127.5, 127.5, 40}, {127.5, 127.5, 20}, 256, 256);
    const auto f = contour_features(img, s);

    CHECK(f[2] == doctest::Approx(0.5).epsilon(1e-12)); // radius ratio

    // Disk-area oracle: count pixel centers inside the circle.
    std::size_t count = 0;
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x)
            if ((x - 127.5) * (x - 127.5) + (y - 127.5) * (y - 127.5) <= 40.0 * 40.0) ++count;
    CHECK(f[3] == doctest::Approx(static_cast<double>(count) / (256.0 * 256.0)).epsilon(1e-12));
    CHECK(std::abs(f[3] - 0.0767) <= 0.002);

    // Border distance: 127.5 - 40 on every side, normalized by 128.
    CHECK(f[5] == doctest::Approx(87.5 / 128.0).epsilon(1e-12));
}

TEST_CASE("contour_features: flat annulus has no edges") {
    const RasterImage img = RasterImage::make(128, 128, 1, 0.6);
    const auto s = make_seg({63.5, 63.5, 30}, {63.5, 63.5, 14}, 128, 128);
    const auto f = contour_features(img, s);
    CHECK(f[6] == doctest::Approx(0.6).epsilon(1e-12)); // annulus mean
    CHECK(f[7] == doctest::Approx(0.0).epsilon(1e-12)); // annulus std
    CHECK(f[11] == 0.0);
    CHECK(f[12] == 0.0);
    CHECK(f[13] == 0.0);
    CHECK(f[14] == 0.0);
}

TEST_CASE("texture_features: flat field") {
    const RasterImage img = RasterImage::make(128, 128, 1, 0.5);
    const auto s = make_seg({63.5, 63.5, 30}, {63.5, 63.5, 14}, 128, 128);
    const auto f = texture_features(img, s);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(f[i]) <= 1e-12); // grad + LoG stats
    CHECK(f[6] == doctest::Approx(1.0).epsilon(1e-12));         // LBP energy annulus
    CHECK(f[7] == doctest::Approx(0.0).epsilon(1e-12));         // LBP entropy annulus
    CHECK(f[8] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f[9] == doctest::Approx(0.0).epsilon(1e-12));
    for (int i = 10; i < 16; ++i) CHECK(std::abs(f[i]) <= 1e-9); // Haar responses
}

TEST_CASE("lbp_code_at: hand-evaluated 3x3 patch") {
    // Neighbors in order E, NE, N, NW, W, SW, S, SE with two at 0.6 and the
    // rest 0.4 around a 0.5 center.
    RasterImage patch = RasterImage::make(3, 3, 1, 0.4);
    patch.at(1, 1) = 0.5;
    patch.at(2, 1) = 0.6; // E
    patch.at(2, 2) = 0.6; // SE
    const std::uint8_t code = lbp_code_at(patch, 1, 1);
    CHECK(std::popcount(static_cast<unsigned>(code)) == 2);
    CHECK(lbp_uniform_bin(code) < kLbpBins - 1); // two transitions: uniform
}

TEST_CASE("lbp_uniform_bin: canonical 59-bin mapping") {
    int uniform = 0;
    std::set<int> bins;
    for (int c = 0; c < 256; ++c) {
        const int b = lbp_uniform_bin(static_cast<std::uint8_t>(c));
        bins.insert(b);
        if (b != kLbpBins - 1) ++uniform;
        CHECK(b >= 0);
        CHECK(b < kLbpBins);
    }
    CHECK(uniform == 58);
    CHECK(bins.size() == 59);
}

TEST_CASE("texture_features: LBP block invariant to monotone remapping") {
    const RasterImage img = random_image(128, 128, 91);
    RasterImage remapped = img;
    for (double& v : remapped.data) v = 0.05 + 0.9 * v * v * v; // strictly increasing
    const auto s = make_seg({63.5, 63.5, 32}, {63.5, 63.5, 15}, 128, 128);
    const auto a = texture_features(img, s);
    const auto b = texture_features(remapped, s);
    for (int i = 6; i <= 9; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("texture_features: Haar response on a half plane is contrast/2") {
    RasterImage img = RasterImage::make(256, 256, 1);
    for (int y = 0; y < 256; ++y)
        for (int x = 0; x < 256; ++x) img.at(x, y) = x < 128 ? 0.2 : 0.8;
    const auto s = make_seg({128, 128, 40}, {128, 128, 20}, 256, 256);
    const auto f = texture_features(img, s);
    // Window side 80 centered at (128,128): left half dark, right bright.
    CHECK(f[10] == doctest::Approx(0.3).epsilon(1e-9)); // (0.8 - 0.2)/2
    CHECK(f[11] == doctest::Approx(0.0).epsilon(1e-9)); // vertical split is balanced
}

TEST_CASE("contour geometry features ignore pixel intensities") {
    const auto s = make_seg({60.5, 70.5, 35}, {63.5, 68.5, 16}, 144, 144);
    const auto f1 = contour_features(random_image(144, 144, 1), s);
    const auto f2 = contour_features(random_image(144, 144, 2), s);
    for (int i = 0; i < 6; ++i) CHECK(f1[i] == f2[i]);
}

TEST_CASE("extract: totality, determinism, and ranges") {
    synth::PhantomSpec spec;
    spec.grade = Grade::B;
    spec.seed = 77;
    const synth::Phantom ph = synth::generate(spec);
    const auto s = make_seg(ph.cell_truth, ph.nucleus_truth, spec.side, spec.side);

    const FeatureVector a = extract(ph.image, s);
    const FeatureVector b = extract(ph.image, s);
    CHECK(a.layout_version == kLayoutVersion);
    for (int i = 0; i < 31; ++i) {
        CHECK(std::isfinite(a.values[i]));
        CHECK(a.values[i] == b.values[i]);
    }
    CHECK(a.values[2] > 0.0);
    CHECK(a.values[2] < 1.0);
    CHECK(a.values[3] >= 0.0);
    CHECK(a.values[3] <= 1.0);
    CHECK(a.values[4] >= 0.0);
    CHECK(a.values[4] <= 1.0);
    CHECK(a.values[14] >= 0.0);
    CHECK(a.values[14] <= 1.0);
    CHECK(a.values[22] >= 0.0);        // entropy
    CHECK(a.values[21] > 0.0);         // energy
    CHECK(a.values[21] <= 1.0);
}

TEST_CASE("extract: grade A phantom has a larger relative outer radius than C") {
    for (std::uint64_t seed : {10ull, 20ull, 30ull}) {
        synth::PhantomSpec sa, sc;
        sa.grade = Grade::A;
        sc.grade = Grade::C;
        sa.seed = sc.seed = seed;
        const synth::Phantom a = synth::generate(sa);
        const synth::Phantom c = synth::generate(sc);
        const auto fa =
            extract(a.image, make_seg(a.cell_truth, a.nucleus_truth, sa.side, sa.side));
        const auto fc =
            extract(c.image, make_seg(c.cell_truth, c.nucleus_truth, sc.side, sc.side));
        CHECK(fa.values[0] > fc.values[0]);
    }
}

TEST_CASE("features: empty annulus is an error") {
    const RasterImage img = RasterImage::make(64, 64, 1, 0.5);
    // Radii differ but the rasterized disks are identical, so the annulus
    // has no pixels.
    const auto s = make_seg({31.5, 31.5, 10.0}, {31.5, 31.5, 9.9999}, 64, 64);
    REQUIRE(s.outer_mask.bits == s.nucleus_mask.bits);
    try {
        contour_features(img, s);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == errc::empty_region);
    }
    CHECK_THROWS_AS(texture_features(img, s), Error);
}

TEST_CASE("texture_features_at: matches region semantics on a flat field") {
    const RasterImage img = RasterImage::make(128, 128, 1, 0.5);
    const auto s = make_seg({63.5, 63.5, 30}, {63.5, 63.5, 14}, 128, 128);
    const auto rows = texture_features_at(img, s, {{64, 64}, {40, 70}}, 33);
    REQUIRE(rows.size() == 2);
    for (const auto& f : rows) {
        for (int i = 0; i < 6; ++i) CHECK(std::abs(f[i]) <= 1e-12);
        CHECK(f[6] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(f[8] == f[6]);
    }
}
