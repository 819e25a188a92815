#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "coc/features.hpp"
#include "coc/grade.hpp"

namespace coc::cli {

/// One dataset row. Paths are stored resolved against the manifest's
/// directory.
struct ManifestRow {
    std::string id;
    std::filesystem::path image_path;
    std::optional<Grade> grade;
    std::optional<std::filesystem::path> cell_mask_path;
    std::optional<std::filesystem::path> nucleus_mask_path;
};

struct Manifest {
    std::vector<ManifestRow> rows;
    std::filesystem::path base_dir;
};

/// CSV with header `id,image_path,grade,cell_mask_path,nucleus_mask_path`;
/// grade and the mask paths may be empty. Parse errors name line and column.
/// Duplicate ids are rejected.
Manifest load_manifest(const std::filesystem::path& path);

/// Writes rows with paths relative to the manifest directory when possible.
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct FeatureRow {
    std::string id;
    std::array<double, feat::kFeatureCount> values{};
    std::optional<Grade> grade;
};

/// Features CSV: header `id,f01..f31,grade`; grade empty for
/// prediction-only rows. Doubles are written with round-trip precision.
void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_features_csv(const std::filesystem::path& path);

} // namespace coc::cli
