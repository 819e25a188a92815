#include "coc/raster.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coc/error.hpp"

namespace coc {

RasterImage RasterImage::make(int w, int h, int c, double fill) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        fail(errc::invalid_params, "bad image dimensions");
    RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.data.assign(static_cast<std::size_t>(w) * h * c, fill);
    return img;
}

void RasterImage::validate_entry() const {
    if (width < 16 || height < 16)
        fail(errc::invalid_params, "image smaller than 16x16");
    if (channels != 1 && channels != 3)
        fail(errc::invalid_params, "channel count must be 1 or 3");
    if (data.size() != static_cast<std::size_t>(width) * height * channels)
        fail(errc::invalid_params, "data length does not match dimensions");
    for (double v : data) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
            fail(errc::invalid_data, "intensity outside [0,1]");
    }
}

BitMask BitMask::make(int w, int h, bool fill) {
    if (w <= 0 || h <= 0) fail(errc::invalid_params, "bad mask dimensions");
    BitMask m;
    m.width = w;
    m.height = h;
    m.bits.assign(static_cast<std::size_t>(w) * h, fill ? 1 : 0);
    return m;
}

std::size_t BitMask::count() const {
    return static_cast<std::size_t>(
        std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

BitMask rasterize_circle(const Circle& c, int w, int h) {
    if (!(c.r > 0.0)) fail(errc::invalid_geometry, "circle radius must be positive");
    BitMask m = BitMask::make(w, h);
    const double r2 = c.r * c.r;
    const int x0 = std::max(0, static_cast<int>(std::floor(c.cx - c.r)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.cx + c.r)));
    const int y0 = std::max(0, static_cast<int>(std::floor(c.cy - c.r)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.cy + c.r)));
    for (int y = y0; y <= y1; ++y) {
        const double dy = y - c.cy;
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - c.cx;
            if (dx * dx + dy * dy <= r2) m.set(x, y, true);
        }
    }
    return m;
}

BitMask annulus_mask(const Circle& outer, const Circle& inner, int w, int h) {
    if (!(inner.r < outer.r))
        fail(errc::invalid_geometry, "inner radius must be smaller than outer");
    const double dc = std::hypot(outer.cx - inner.cx, outer.cy - inner.cy);
    if (dc > outer.r)
        fail(errc::invalid_geometry, "annulus centers too far apart");
    return mask_subtract(rasterize_circle(outer, w, h), rasterize_circle(inner, w, h));
}

static void require_same_shape(const BitMask& a, const BitMask& b) {
    if (a.width != b.width || a.height != b.height)
        fail(errc::shape_mismatch, "mask dimensions differ");
}

BitMask mask_and(const BitMask& a, const BitMask& b) {
    require_same_shape(a, b);
    BitMask out = BitMask::make(a.width, a.height);
    for (std::size_t i = 0; i < a.bits.size(); ++i) out.bits[i] = a.bits[i] & b.bits[i];
    return out;
}

BitMask mask_subtract(const BitMask& a, const BitMask& b) {
    require_same_shape(a, b);
    BitMask out = BitMask::make(a.width, a.height);
    for (std::size_t i = 0; i < a.bits.size(); ++i)
        out.bits[i] = static_cast<std::uint8_t>(a.bits[i] & ~b.bits[i] & 1);
    return out;
}

bool mask_subset(const BitMask& inner, const BitMask& outer) {
    require_same_shape(inner, outer);
    for (std::size_t i = 0; i < inner.bits.size(); ++i)
        if (inner.bits[i] && !outer.bits[i]) return false;
    return true;
}

double polygon_signed_area(const Contour& c) {
    const auto& p = c.points;
    const std::size_t n = p.size();
    if (n < 3) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = p[i];
        const Vec2& b = p[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

Contour circle_contour(const Circle& c, int n_points) {
    Contour out;
    out.points.reserve(n_points);
    const double two_pi = 6.283185307179586476925286766559;
    for (int i = 0; i < n_points; ++i) {
        const double t = two_pi * i / n_points;
        out.points.push_back({c.cx + c.r * std::cos(t), c.cy + c.r * std::sin(t)});
    }
    return out;
}

} // namespace coc
