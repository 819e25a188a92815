#pragma once

#include <optional>
#include <vector>

#include "coc/preprocess.hpp"
#include "coc/raster.hpp"

namespace coc::seg {

/// Active-contour parameters. alpha/beta weigh the elasticity and rigidity
/// terms of the internal energy, gamma is the explicit step size, balloon is
/// the pressure weight along the outward normal (negative = shrink),
/// sigma_ext the Gaussian sigma of the edge image. Convergence is declared
/// when the largest point displacement stays under tol for stall_iters
/// consecutive iterations.
struct SnakeParams {
    int n_points = 128;
    // Explicit-scheme stability: gamma*alpha <= ~0.25 for the elasticity
    // term and gamma*beta <= ~1/16 for the rigidity term.
    double alpha = 0.05;
    double beta = 0.01;
    double gamma = 3.0;
    double balloon = -0.06;
    double sigma_ext = 2.5;
    int max_iters = 800;
    double tol = 0.1;
    int stall_iters = 5;

    void validate() const;
};

struct RegionGrowParams {
    double tau = 0.15;      // fraction of the intensity range inside the bound
    int connectivity = 4;   // 4 or 8
    int seed_window = 5;    // odd side of the seed-mean window

    void validate() const;
};

struct SnakeResult {
    Contour contour;
    bool converged = false;
    int iterations = 0;
    /// Spec energy after each iteration (internal minus summed edge
    /// strength), recorded for the monotonicity checks.
    std::vector<double> energy_trace;
    /// Enclosed polygon area after each iteration.
    std::vector<double> area_trace;
    /// Iterations (0-based) right after which the contour was resampled.
    std::vector<int> resample_iters;
};

/// Evolves a closed snake on the preprocessed grayscale image. Steps are
/// explicit gradient descent with backtracking: when balloon == 0 a step is
/// kept only if the total energy does not increase; with balloon pressure a
/// step is kept only if the enclosed area does not grow. The contour is
/// resampled to uniform arc length every 10 iterations. Default init is a
/// circle of radius 0.45 * min(w,h) at the image center.
/// Throws segmentation_failed if the contour collapses (area < 100 px^2).
SnakeResult snake_outer_boundary(const RasterImage& gray, const SnakeParams& p,
                                 const Contour* init = nullptr);

/// Kasa algebraic least-squares circle through the points. Throws
/// degenerate_fit for < 3 points or a numerically singular system
/// (collinear points).
Circle fit_circle(const std::vector<Vec2>& points);

/// Seeded flood fill: admits pixels inside `bound` whose intensity is within
/// tau * (max - min inside bound) of the mean over the seed_window square
/// around the seed. Throws invalid_seed if the seed is outside the image or
/// the bound.
BitMask region_grow_nucleus(const RasterImage& gray, Vec2 seed, const Circle& bound,
                            const RegionGrowParams& p);

struct Segmentation {
    Circle outer;
    Circle nucleus;
    BitMask outer_mask;
    BitMask nucleus_mask;
    Contour snake_contour;
    bool converged = false;
    int iterations_used = 0;
    /// Set when the fitted nucleus radius had to be clamped to 0.9 * outer.r.
    bool nucleus_clamped = false;

    void validate() const;
};

struct SegmentationConfig {
    pre::DiffusionParams diffusion;
    SnakeParams snake;
    RegionGrowParams region_grow;
    bool apply_white_balance = true;
};

/// Full two-stage segmentation: (white balance ->) grayscale -> anisotropic
/// diffusion -> snake -> circle fit = outer; region growing seeded at the
/// outer center -> circle fit of the region's 4-boundary -> nucleus. The
/// nucleus mask is the fitted nucleus disk clipped into the outer mask.
Segmentation segment(const RasterImage& img, const SegmentationConfig& cfg);

/// 4-connected boundary pixels of a mask (set pixels with a missing or unset
/// 4-neighbor), as pixel-center points.
std::vector<Vec2> mask_boundary_points(const BitMask& mask);

} // namespace coc::seg
