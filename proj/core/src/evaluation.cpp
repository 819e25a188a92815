#include "coc/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "coc/error.hpp"
#include "coc/rng.hpp"

namespace coc::eval {

std::int64_t ConfusionMatrix::total() const {
    std::int64_t t = 0;
    for (const auto& row : m)
        for (std::int64_t v : row) t += v;
    return t;
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t t = 0;
    for (int g = 0; g < kGradeCount; ++g) t += m[g][g];
    return t;
}

namespace {

void require_same_shape(const BitMask& a, const BitMask& b) {
    if (a.width != b.width || a.height != b.height)
        fail(errc::shape_mismatch, "mask dimensions differ");
}

double choose2(double n) { return n * (n - 1.0) / 2.0; }

} // namespace

double dice(const BitMask& a, const BitMask& b) {
    require_same_shape(a, b);
    std::int64_t inter = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        na += a.bits[i];
        nb += b.bits[i];
        inter += a.bits[i] & b.bits[i];
    }
    if (na + nb == 0) return 1.0; // vacuous agreement of empty masks
    return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double rand_index(const BitMask& a, const BitMask& b) {
    require_same_shape(a, b);
    const std::int64_t n = static_cast<std::int64_t>(a.bits.size());
    if (n < 2) fail(errc::shape_mismatch, "rand index needs at least 2 pixels");

    // 2x2 contingency of the binary partitions.
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        if (a.bits[i] && b.bits[i])
            ++n11;
        else if (a.bits[i])
            ++n10;
        else if (b.bits[i])
            ++n01;
        else
            ++n00;
    }
    // Pairs together in both partitions sit in the same cell; pairs apart in
    // both span diagonally opposite cells.
    const double together = choose2(n11) + choose2(n10) + choose2(n01) + choose2(n00);
    const double apart = n11 * n00 + n10 * n01;
    return (together + apart) / choose2(static_cast<double>(n));
}

std::pair<ConfusionMatrix, double> confusion_and_accuracy(
    const std::vector<Grade>& truth, const std::vector<Grade>& predicted) {
    if (truth.empty() || truth.size() != predicted.size())
        fail(errc::shape_mismatch, "grade lists must be non-empty and equal length");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++cm.m[static_cast<int>(truth[i])][static_cast<int>(predicted[i])];
    const double acc = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
    return {cm, acc};
}

SplitIndices stratified_split(const std::vector<Grade>& labels, double train_fraction,
                              std::uint64_t seed) {
    if (labels.empty()) fail(errc::empty_input, "no labels to split");
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        fail(errc::invalid_params, "train fraction must be in (0,1)");

    SplitIndices out;
    for (int g = 0; g < kGradeCount; ++g) {
        std::vector<int> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (static_cast<int>(labels[i]) == g) members.push_back(static_cast<int>(i));
        if (members.empty()) continue;
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(g)));
        rng.shuffle(members);
        const std::size_t n_train = static_cast<std::size_t>(
            std::ceil(train_fraction * static_cast<double>(members.size())));
        for (std::size_t k = 0; k < members.size(); ++k)
            (k < n_train ? out.train : out.test).push_back(members[k]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

} // namespace coc::eval
