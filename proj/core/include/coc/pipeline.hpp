#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coc/config.hpp"
#include "coc/manifest.hpp"
#include "coc/segmentation.hpp"

namespace coc::cli {

struct ImageResult {
    seg::Segmentation segmentation;
    feat::FeatureVector features;
};

/// Segment + featurize one already-loaded image.
ImageResult process_image(const RasterImage& img, const PipelineConfig& cfg);

struct BatchOutcome {
    /// One slot per manifest row, in manifest order; empty on failure.
    std::vector<std::optional<ImageResult>> results;
    /// One "<id>: <error>" line per failed row.
    std::vector<std::string> failures;
};

/// Loads and processes every manifest row, concurrently up to the COC_THREADS
/// cap. Row order and all numeric results are independent of scheduling.
BatchOutcome process_manifest(const Manifest& manifest, const PipelineConfig& cfg);

/// Per-pixel vote mode: texture features are recomputed over a local window
/// centered on each sampled cell pixel (contour features stay global), each
/// pixel is classified, and the majority grade wins. Returns the votes in
/// scan order.
std::vector<Grade> per_pixel_votes(const RasterImage& img, const seg::Segmentation& s,
                                   const rf::ForestModel& model,
                                   const PipelineConfig& cfg);

} // namespace coc::cli
