#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "coc/raster.hpp"
#include "coc/segmentation.hpp"

namespace coc::feat {

inline constexpr int kFeatureCount = 31;
inline constexpr int kContourFeatureCount = 15;
inline constexpr int kTextureFeatureCount = 16;
inline constexpr const char* kLayoutVersion = "coc31-v1";

enum class FeatureGroup { contour, texture };
enum class FeatureRegion { cell, annulus, nucleus, global };

struct FeatureInfo {
    const char* name;
    FeatureGroup group;
    FeatureRegion region;
};

/// Fixed layout of the 31 components; indices 0..14 are contour features,
/// 15..30 texture features. The full table is documented in the README.
const std::array<FeatureInfo, kFeatureCount>& feature_layout();

struct FeatureVector {
    std::array<double, kFeatureCount> values{};
    std::string layout_version = kLayoutVersion;
};

/// Filter constants baked into the layout; exposed for experimentation, the
/// defaults are the documented layout values.
struct FeatureParams {
    double log_sigma_small = 2.0;
    double log_sigma_large = 4.0;
    double haar_window_factor = 2.0; // window side = factor * outer radius
};

/// f1..f15: radii/areas/ratios of the fitted circles, border distance,
/// annulus and nucleus intensity statistics, and edge-component statistics of
/// the Otsu-thresholded gradient magnitude inside the annulus (8-connected).
/// Throws empty_region if the annulus contains no pixels.
std::array<double, kContourFeatureCount> contour_features(const RasterImage& gray,
                                                          const seg::Segmentation& s);

/// f16..f31: gradient/LoG statistics over the annulus, uniform LBP(8,1)
/// histogram energy+entropy over annulus and cell, and six Haar-like
/// responses centered on the nucleus center.
std::array<double, kTextureFeatureCount> texture_features(const RasterImage& gray,
                                                          const seg::Segmentation& s,
                                                          const FeatureParams& p = {});

/// Concatenates contour and texture features in layout order. A 3-channel
/// input is converted to luminance first (no diffusion: texture is measured
/// on the unsmoothed image).
FeatureVector extract(const RasterImage& img, const seg::Segmentation& s,
                      const FeatureParams& p = {});

/// Per-pixel variant used by the vote mode: for each sample point the local
/// square window stands in for both annulus and cell regions; Haar responses
/// are centered on the point. The filter images are computed once for the
/// whole batch. Contour features are not recomputed.
std::vector<std::array<double, kTextureFeatureCount>> texture_features_at(
    const RasterImage& img, const seg::Segmentation& s,
    const std::vector<std::pair<int, int>>& points, int window, const FeatureParams& p = {});

/// Laplacian of Gaussian: separable Gaussian blur followed by the 5-point
/// Laplacian, replicate borders.
RasterImage log_filter(const RasterImage& img, double sigma);

/// 8-bit LBP code at (x, y) (all eight neighbors must be in bounds):
/// bit k set iff neighbor_k >= center, neighbors ordered E, NE, N, NW, W,
/// SW, S, SE.
std::uint8_t lbp_code_at(const RasterImage& gray, int x, int y);

/// Uniform-pattern bin of a code: codes with <= 2 circular bit transitions
/// get bins 0..57 in increasing code order, all others map to bin 58.
int lbp_uniform_bin(std::uint8_t code);

inline constexpr int kLbpBins = 59;

/// Normalized 59-bin uniform LBP histogram over the masked interior pixels.
/// Throws empty_region if no pixel qualifies.
std::array<double, kLbpBins> lbp_histogram(const RasterImage& gray, const BitMask& region);

/// Summed-area table; sum(x0,y0,x1,y1) is inclusive of both corners.
struct IntegralImage {
    int width = 0;
    int height = 0;
    std::vector<double> table;

    static IntegralImage build(const RasterImage& gray);
    double sum(int x0, int y0, int x1, int y1) const;
};

} // namespace coc::feat
