#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace coc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// 2-D pixel grid, grayscale (1 channel) or RGB (3 channels), intensities in
/// [0,1], row-major with interleaved channels. Coordinates are (x, y) with x
/// the column and y the row; the center of pixel (x, y) is the lattice point
/// (x, y), so a circle at (cx, cy) with cx, cy integral sits exactly on a
/// pixel center.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data;

    static RasterImage make(int w, int h, int c = 1, double fill = 0.0);

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }

    /// Checks the pipeline entry invariants: width/height >= 16, declared
    /// channel count, data length, all values finite and inside [0,1].
    void validate_entry() const;
};

struct BitMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    static BitMask make(int w, int h, bool fill = false);

    bool get(int x, int y) const {
        return bits[static_cast<std::size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
    }
    bool in_bounds(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }

    std::size_t count() const;
};

/// Circle in pixel-center coordinates (see RasterImage).
struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double r = 0.0;
};

/// Closed contour; points are ordered and the segment from the last point
/// back to the first is implied.
struct Contour {
    std::vector<Vec2> points;
};

/// Disk rasterization: pixel (x, y) is set iff its center lies inside the
/// circle, (x-cx)^2 + (y-cy)^2 <= r^2. Throws invalid_geometry for r <= 0.
BitMask rasterize_circle(const Circle& c, int w, int h);

/// rasterize(outer) minus rasterize(inner). Requires inner.r < outer.r and
/// center distance <= outer.r.
BitMask annulus_mask(const Circle& outer, const Circle& inner, int w, int h);

BitMask mask_and(const BitMask& a, const BitMask& b);
BitMask mask_subtract(const BitMask& a, const BitMask& b);
bool mask_subset(const BitMask& inner, const BitMask& outer);

/// Signed area of the closed polygon (shoelace); positive for the vertex
/// order produced by circle_contour().
double polygon_signed_area(const Contour& c);

/// n points evenly spaced on a circle, in increasing-angle order.
Contour circle_contour(const Circle& c, int n_points);

} // namespace coc
