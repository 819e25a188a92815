#include <doctest.h>

#include <cmath>

#include "coc/error.hpp"
#include "coc/synthdata.hpp"

using namespace coc;
using namespace coc::synth;

TEST_CASE("generate: identical spec gives identical bytes") {
    PhantomSpec spec;
    spec.grade = Grade::B;
    spec.seed = 31337;
    const Phantom a = generate(spec);
    const Phantom b = generate(spec);
    CHECK(a.image.data == b.image.data);
    CHECK(a.cell_mask.bits == b.cell_mask.bits);
    CHECK(a.nucleus_mask.bits == b.nucleus_mask.bits);
    CHECK(a.cell_truth.r == b.cell_truth.r);
}

TEST_CASE("generate: grade A cumulus is thicker than grade C at equal seed") {
    for (std::uint64_t seed : {1ull, 7ull, 99ull}) {
        PhantomSpec sa, sc;
        sa.grade = Grade::A;
        sc.grade = Grade::C;
        sa.seed = sc.seed = seed;
        CHECK(generate(sa).cumulus_thickness > generate(sc).cumulus_thickness);
    }
}

TEST_CASE("generate: grade D ooplasm is noisier than grade A without pixel noise") {
    for (std::uint64_t seed : {5ull, 6ull}) {
        PhantomSpec sa, sd;
        sa.grade = Grade::A;
        sd.grade = Grade::D;
        sa.seed = sd.seed = seed;
        sa.noise_sigma = sd.noise_sigma = 0.0;
        const Phantom a = generate(sa);
        const Phantom d = generate(sd);

        auto ooplasm_variance = [](const Phantom& ph) {
            double s = 0, s2 = 0;
            int n = 0;
            for (int y = 0; y < ph.image.height; ++y)
                for (int x = 0; x < ph.image.width; ++x) {
                    const double dist = std::hypot(x - ph.cell_truth.cx, y - ph.cell_truth.cy);
                    if (dist > 1.3 * ph.nucleus_truth.r && dist < 0.85 * ph.ooplasm_radius) {
                        const double v = ph.image.at(x, y);
                        s += v;
                        s2 += v * v;
                        ++n;
                    }
                }
            const double mean = s / n;
            return s2 / n - mean * mean;
        };
        CHECK(ooplasm_variance(d) > ooplasm_variance(a));
    }
}

TEST_CASE("generate: truth masks satisfy the segmentation nesting invariants") {
    for (int g = 0; g < 4; ++g) {
        PhantomSpec spec;
        spec.grade = static_cast<Grade>(g);
        spec.seed = 400 + g;
        const Phantom ph = generate(spec);
        CHECK(ph.nucleus_truth.r < ph.cell_truth.r);
        CHECK(ph.nucleus_mask.count() > 0);
        CHECK(mask_subset(ph.nucleus_mask, ph.cell_mask));
        ph.image.validate_entry();
    }
}

TEST_CASE("generate: invalid specs rejected") {
    PhantomSpec small;
    small.side = 100;
    CHECK_THROWS_AS(generate(small), Error);
    PhantomSpec noisy;
    noisy.noise_sigma = 0.2;
    CHECK_THROWS_AS(generate(noisy), Error);
    PhantomSpec washed;
    washed.contrast = 0.0;
    CHECK_THROWS_AS(generate(washed), Error);
}

TEST_CASE("generate_corpus: balanced, ordered, deterministic") {
    const auto corpus = generate_corpus(3, 17, 256, 1.0, 0.02);
    REQUIRE(corpus.size() == 12);
    for (int g = 0; g < 4; ++g)
        for (int i = 0; i < 3; ++i)
            CHECK(corpus[g * 3 + i].grade == static_cast<Grade>(g));
    const auto again = generate_corpus(3, 17, 256, 1.0, 0.02);
    CHECK(corpus[5].image.data == again[5].image.data);
}
