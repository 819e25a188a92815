#pragma once

#include <vector>

#include "coc/raster.hpp"

namespace coc::pre {

/// Perona-Malik diffusion parameters. kappa is in intensity units ([0,1]
/// scale), lambda is the explicit-scheme step size (stable for <= 0.25 with
/// 4-neighbor flux).
struct DiffusionParams {
    int iterations = 20;
    double kappa = 0.1;
    double lambda = 0.25;

    void validate() const;
};

/// Gray-world white balance: scales each channel so all channel means equal
/// the mean of the channel means, then clamps to [0,1]. Throws
/// degenerate_channel if any channel mean is zero.
RasterImage gray_world_balance(const RasterImage& img);

/// Rec.601 luminance, 0.299 R + 0.587 G + 0.114 B.
RasterImage to_grayscale(const RasterImage& img);

/// Perona-Malik diffusion with conduction g(s) = exp(-(s/kappa)^2),
/// 4-neighbor fluxes and replicate borders. The per-pixel update is a convex
/// combination of the neighborhood, so output stays within [min, max] of the
/// input.
RasterImage anisotropic_diffuse(const RasterImage& img, const DiffusionParams& p);

/// 1-D Gaussian taps truncated at radius ceil(3 sigma) and renormalized to
/// sum exactly 1.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur, replicate borders. sigma must be > 0.
RasterImage gaussian_smooth(const RasterImage& img, double sigma);

/// Central-difference derivative images, replicate borders.
RasterImage central_diff_x(const RasterImage& img);
RasterImage central_diff_y(const RasterImage& img);

/// sqrt(gx^2 + gy^2) with central differences.
RasterImage gradient_magnitude(const RasterImage& img);

} // namespace coc::pre
