#pragma once

#include <stdexcept>
#include <string>

namespace coc {

enum class errc {
    invalid_geometry,
    degenerate_channel,
    invalid_params,
    segmentation_failed,
    degenerate_fit,
    invalid_seed,
    empty_region,
    empty_training_set,
    invalid_data,
    incompatible_model,
    invalid_posterior,
    empty_input,
    shape_mismatch,
    io_error,
    invalid_manifest,
    invalid_config,
};

inline const char* errc_name(errc kind) {
    switch (kind) {
        case errc::invalid_geometry: return "InvalidGeometry";
        case errc::degenerate_channel: return "DegenerateChannel";
        case errc::invalid_params: return "InvalidParams";
        case errc::segmentation_failed: return "SegmentationFailed";
        case errc::degenerate_fit: return "DegenerateFit";
        case errc::invalid_seed: return "InvalidSeed";
        case errc::empty_region: return "EmptyRegion";
        case errc::empty_training_set: return "EmptyTrainingSet";
        case errc::invalid_data: return "InvalidData";
        case errc::incompatible_model: return "IncompatibleModel";
        case errc::invalid_posterior: return "InvalidPosterior";
        case errc::empty_input: return "EmptyInput";
        case errc::shape_mismatch: return "ShapeMismatch";
        case errc::io_error: return "IoError";
        case errc::invalid_manifest: return "InvalidManifest";
        case errc::invalid_config: return "InvalidConfig";
    }
    return "Error";
}

class Error : public std::runtime_error {
public:
    Error(errc kind, const std::string& message)
        : std::runtime_error(std::string(errc_name(kind)) + ": " + message), kind_(kind) {}

    errc kind() const { return kind_; }

private:
    errc kind_;
};

[[noreturn]] inline void fail(errc kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace coc
