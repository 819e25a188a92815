#include "coc/overlay.hpp"

#include <cmath>

namespace coc::cli {

namespace {

void draw_circle(RasterImage& rgb, const Circle& c, bool dashed) {
    const double two_pi = 6.283185307179586476925286766559;
    const double dtheta = 0.4 / std::max(1.0, c.r); // sub-pixel arc steps
    const double dash_period = two_pi / 24.0;
    for (double t = 0.0; t < two_pi; t += dtheta) {
        if (dashed && std::fmod(t, dash_period) > 0.6 * dash_period) continue;
        const int x = static_cast<int>(std::lround(c.cx + c.r * std::cos(t)));
        const int y = static_cast<int>(std::lround(c.cy + c.r * std::sin(t)));
        if (!rgb.in_bounds(x, y)) continue;
        rgb.at(x, y, 0) = 1.0;
        rgb.at(x, y, 1) = 0.0;
        rgb.at(x, y, 2) = 0.0;
    }
}

} // namespace

RasterImage draw_overlay(const RasterImage& img, const seg::Segmentation& s) {
    RasterImage rgb = RasterImage::make(img.width, img.height, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                rgb.at(x, y, c) = img.channels == 3 ? img.at(x, y, c) : img.at(x, y, 0);
    draw_circle(rgb, s.outer, false);
    draw_circle(rgb, s.nucleus, true);
    return rgb;
}

} // namespace coc::cli
