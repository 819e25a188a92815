#pragma once

#include "coc/raster.hpp"
#include "coc/segmentation.hpp"

namespace coc::cli {

/// RGB copy of the image with the outer circle drawn solid and the nucleus
/// circle dashed, both 1 px red.
RasterImage draw_overlay(const RasterImage& img, const seg::Segmentation& s);

} // namespace coc::cli
