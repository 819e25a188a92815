#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "coc/grade.hpp"
#include "coc/raster.hpp"

namespace coc::eval {

/// 4x4 counts, rows = true grade, columns = predicted grade.
struct ConfusionMatrix {
    std::array<std::array<std::int64_t, kGradeCount>, kGradeCount> m{};

    std::int64_t total() const;
    std::int64_t trace() const;
};

/// 2 |a & b| / (|a| + |b|); 1.0 when both masks are empty.
double dice(const BitMask& a, const BitMask& b);

/// Pairwise-agreement Rand index of the two binary pixel partitions,
/// computed in closed form from the 2x2 overlap counts.
double rand_index(const BitMask& a, const BitMask& b);

std::pair<ConfusionMatrix, double> confusion_and_accuracy(
    const std::vector<Grade>& truth, const std::vector<Grade>& predicted);

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> test;
};

/// Per class, ceil(train_fraction * n_c) indices are drawn into the train
/// set by a seeded shuffle; the returned index lists are sorted ascending,
/// disjoint, and cover 0..n-1.
SplitIndices stratified_split(const std::vector<Grade>& labels, double train_fraction,
                              std::uint64_t seed);

} // namespace coc::eval
