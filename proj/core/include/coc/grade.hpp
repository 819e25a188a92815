#pragma once

#include <optional>
#include <string>

namespace coc {

/// Oocyte quality grade, ordinal A < B < C < D. A = thick multi-layer
/// cumulus and homogeneous ooplasm, D = denuded/irregular.
enum class Grade : int { A = 0, B = 1, C = 2, D = 3 };

inline constexpr int kGradeCount = 4;

inline char grade_letter(Grade g) {
    return static_cast<char>('A' + static_cast<int>(g));
}

inline std::optional<Grade> parse_grade(const std::string& token) {
    if (token.size() != 1) return std::nullopt;
    switch (token[0]) {
        case 'A': return Grade::A;
        case 'B': return Grade::B;
        case 'C': return Grade::C;
        case 'D': return Grade::D;
        default: return std::nullopt;
    }
}

} // namespace coc
