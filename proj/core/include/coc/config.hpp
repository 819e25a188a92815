#pragma once

#include <filesystem>
#include <string>

#include "coc/features.hpp"
#include "coc/forest.hpp"
#include "coc/segmentation.hpp"

namespace coc::cli {

/// Every parameter the underlying method leaves open, in one place. The
/// defaults are the values used throughout the test suite.
struct PipelineConfig {
    pre::DiffusionParams diffusion;
    seg::SnakeParams snake;
    seg::RegionGrowParams region_grow;
    rf::ForestParams forest;
    feat::FeatureParams features;

    struct SynthParams {
        int side = 256;
        double contrast = 1.0;
        double noise_sigma = 0.035;
    } synth;

    bool apply_white_balance = true;

    /// Per-pixel vote mode: stride between sampled pixels and the side of
    /// the local texture window.
    int per_pixel_stride = 8;
    int per_pixel_window = 33;

    seg::SegmentationConfig segmentation_config() const {
        return {diffusion, snake, region_grow, apply_white_balance};
    }

    void validate() const;
};

PipelineConfig default_config();

/// JSON round trip. The emitted document carries a `_doc` string per section
/// describing the parameters; loaders ignore those keys. Unknown keys are
/// rejected, missing keys keep their defaults. load_config validates.
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

} // namespace coc::cli
