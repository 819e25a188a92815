#include <doctest.h>

#include <cmath>

#include "coc/error.hpp"
#include "coc/evaluation.hpp"
#include "coc/rng.hpp"

using namespace coc;
using namespace coc::eval;

namespace {

BitMask mask_of(int w, int h, std::initializer_list<std::pair<int, int>> set_pixels) {
    BitMask m = BitMask::make(w, h);
    for (const auto& [x, y] : set_pixels) m.set(x, y, true);
    return m;
}

BitMask random_mask(int w, int h, Rng& rng) {
    BitMask m = BitMask::make(w, h);
    for (auto& b : m.bits) b = rng.next_double() < 0.5 ? 1 : 0;
    return m;
}

/// Pair-enumeration oracle for the Rand index.
double rand_brute(const BitMask& a, const BitMask& b) {
    const std::size_t n = a.bits.size();
    std::int64_t agree = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            ++pairs;
            const bool same_a = a.bits[i] == a.bits[j];
            const bool same_b = b.bits[i] == b.bits[j];
            if (same_a == same_b) ++agree;
        }
    return static_cast<double>(agree) / static_cast<double>(pairs);
}

} // namespace

TEST_CASE("dice: identity, disjoint, half overlap, empty") {
    const BitMask a = mask_of(4, 4, {{0, 0}, {1, 1}});
    CHECK(dice(a, a) == 1.0);
    const BitMask b = mask_of(4, 4, {{2, 2}, {3, 3}});
    CHECK(dice(a, b) == 0.0);
    const BitMask c = mask_of(4, 4, {{1, 1}, {2, 2}});
    CHECK(dice(a, c) == doctest::Approx(0.5).epsilon(1e-15));
    const BitMask empty = BitMask::make(4, 4);
    CHECK(dice(empty, empty) == 1.0);
    try {
        dice(a, BitMask::make(4, 5));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.kind() == errc::shape_mismatch);
    }
}

TEST_CASE("rand_index: identity, complement, hand case") {
    const BitMask a = mask_of(3, 3, {{0, 0}, {1, 1}, {2, 0}});
    CHECK(rand_index(a, a) == 1.0);
    BitMask comp = a;
    for (auto& b : comp.bits) b ^= 1;
    CHECK(rand_index(a, comp) == 1.0);

    const BitMask p1 = mask_of(2, 2, {{0, 0}});
    const BitMask p12 = mask_of(2, 2, {{0, 0}, {1, 0}});
    CHECK(rand_index(p1, p12) == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS_AS(rand_index(p1, BitMask::make(2, 3)), Error);
}

TEST_CASE("rand_index: closed form equals pair enumeration on 4x4 masks") {
    Rng rng(2);
    for (int trial = 0; trial < 2000; ++trial) {
        const BitMask a = random_mask(4, 4, rng);
        const BitMask b = random_mask(4, 4, rng);
        CHECK(rand_index(a, b) == doctest::Approx(rand_brute(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("dice and rand_index: symmetric and bounded") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const BitMask a = random_mask(6, 5, rng);
        const BitMask b = random_mask(6, 5, rng);
        const double d = dice(a, b);
        const double r = rand_index(a, b);
        CHECK(d == dice(b, a));
        CHECK(r == rand_index(b, a));
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
    }
}

TEST_CASE("confusion_and_accuracy: perfect and all-wrong") {
    const std::vector<Grade> truth{Grade::A, Grade::B, Grade::C, Grade::D};
    const auto [cm_good, acc_good] = confusion_and_accuracy(truth, truth);
    CHECK(acc_good == 1.0);
    for (int g = 0; g < 4; ++g) CHECK(cm_good.m[g][g] == 1);

    const std::vector<Grade> wrong{Grade::B, Grade::C, Grade::D, Grade::A};
    const auto [cm_bad, acc_bad] = confusion_and_accuracy(truth, wrong);
    CHECK(acc_bad == 0.0);
    CHECK(cm_bad.total() == 4);
    CHECK(cm_bad.trace() == 0);

    CHECK_THROWS_AS(confusion_and_accuracy(truth, {Grade::A}), Error);
    CHECK_THROWS_AS(confusion_and_accuracy({}, {}), Error);
}

TEST_CASE("stratified_split: 30% of 80 balanced samples") {
    std::vector<Grade> labels;
    for (int g = 0; g < 4; ++g)
        for (int i = 0; i < 20; ++i) labels.push_back(static_cast<Grade>(g));
    const SplitIndices s = stratified_split(labels, 0.3, 42);
    CHECK(s.train.size() == 24);
    CHECK(s.test.size() == 56);
    std::array<int, 4> per_class{};
    for (int i : s.train) ++per_class[static_cast<int>(labels[i])];
    for (int c : per_class) CHECK(c == 6);
}

TEST_CASE("stratified_split: exact halving of two per class") {
    std::vector<Grade> labels{Grade::A, Grade::A, Grade::B, Grade::B};
    const SplitIndices s = stratified_split(labels, 0.5, 7);
    CHECK(s.train.size() == 2);
    CHECK(s.test.size() == 2);
}

TEST_CASE("stratified_split: deterministic, disjoint, covering") {
    Rng rng(9);
    std::vector<Grade> labels;
    for (int i = 0; i < 57; ++i) labels.push_back(static_cast<Grade>(rng.next_below(4)));

    const SplitIndices a = stratified_split(labels, 0.4, 123);
    const SplitIndices b = stratified_split(labels, 0.4, 123);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);

    std::vector<bool> seen(labels.size(), false);
    for (int i : a.train) {
        CHECK(!seen[i]);
        seen[i] = true;
    }
    for (int i : a.test) {
        CHECK(!seen[i]);
        seen[i] = true;
    }
    CHECK(std::count(seen.begin(), seen.end(), false) == 0);

    // Per-class train counts are ceil(fraction * n_c).
    std::array<int, 4> n_class{}, n_train{};
    for (Grade g : labels) ++n_class[static_cast<int>(g)];
    for (int i : a.train) ++n_train[static_cast<int>(labels[i])];
    for (int g = 0; g < 4; ++g)
        CHECK(n_train[g] == static_cast<int>(std::ceil(0.4 * n_class[g])));

    CHECK_THROWS_AS(stratified_split({}, 0.3, 1), Error);
    CHECK_THROWS_AS(stratified_split(labels, 0.0, 1), Error);
    CHECK_THROWS_AS(stratified_split(labels, 1.0, 1), Error);
}
