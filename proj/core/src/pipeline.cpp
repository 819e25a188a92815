#include "coc/pipeline.hpp"

#include <cmath>

#include "coc/error.hpp"
#include "coc/image_io.hpp"
#include "coc/parallel.hpp"
#include "coc/preprocess.hpp"

namespace coc::cli {

ImageResult process_image(const RasterImage& img, const PipelineConfig& cfg) {
    ImageResult out;
    out.segmentation = seg::segment(img, cfg.segmentation_config());
    const RasterImage* feature_img = &img;
    RasterImage balanced;
    if (img.channels == 3 && cfg.apply_white_balance) {
        balanced = pre::gray_world_balance(img);
        feature_img = &balanced;
    }
    out.features = feat::extract(*feature_img, out.segmentation, cfg.features);
    return out;
}

BatchOutcome process_manifest(const Manifest& manifest, const PipelineConfig& cfg) {
    const int n = static_cast<int>(manifest.rows.size());
    BatchOutcome out;
    out.results.resize(n);
    std::vector<std::string> errors(n);

    parallel_for(n, [&](int i) {
        try {
            const RasterImage img = load_image(manifest.rows[i].image_path);
            out.results[i] = process_image(img, cfg);
        } catch (const std::exception& e) {
            errors[i] = manifest.rows[i].id + ": " + e.what();
        }
    });
    for (int i = 0; i < n; ++i)
        if (!errors[i].empty()) out.failures.push_back(errors[i]);
    return out;
}

std::vector<Grade> per_pixel_votes(const RasterImage& img, const seg::Segmentation& s,
                                   const rf::ForestModel& model, const PipelineConfig& cfg) {
    const auto contour = feat::contour_features(img, s);

    std::vector<std::pair<int, int>> points;
    for (int y = 0; y < s.outer_mask.height; y += cfg.per_pixel_stride)
        for (int x = 0; x < s.outer_mask.width; x += cfg.per_pixel_stride)
            if (s.outer_mask.get(x, y)) points.emplace_back(x, y);
    if (points.empty()) fail(errc::empty_region, "no cell pixels to sample");

    const auto texture =
        feat::texture_features_at(img, s, points, cfg.per_pixel_window, cfg.features);

    std::vector<Grade> votes;
    votes.reserve(points.size());
    feat::FeatureVector v;
    for (std::size_t k = 0; k < points.size(); ++k) {
        std::copy(contour.begin(), contour.end(), v.values.begin());
        std::copy(texture[k].begin(), texture[k].end(),
                  v.values.begin() + feat::kContourFeatureCount);
        votes.push_back(rf::assign(rf::posterior(model, v)));
    }
    return votes;
}

} // namespace coc::cli
