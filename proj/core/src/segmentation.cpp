#include "coc/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>

#include "coc/error.hpp"

namespace coc::seg {

void SnakeParams::validate() const {
    if (n_points < 16) fail(errc::invalid_params, "snake needs at least 16 points");
    if (alpha < 0.0 || beta < 0.0) fail(errc::invalid_params, "alpha/beta must be >= 0");
    if (!(gamma > 0.0)) fail(errc::invalid_params, "gamma must be > 0");
    if (!(sigma_ext > 0.0)) fail(errc::invalid_params, "sigma_ext must be > 0");
    if (max_iters < 1) fail(errc::invalid_params, "max_iters must be >= 1");
    if (!(tol > 0.0)) fail(errc::invalid_params, "tol must be > 0");
    if (stall_iters < 1) fail(errc::invalid_params, "stall_iters must be >= 1");
}

void RegionGrowParams::validate() const {
    if (!(tau > 0.0) || tau >= 1.0) fail(errc::invalid_params, "tau must be in (0,1)");
    if (connectivity != 4 && connectivity != 8)
        fail(errc::invalid_params, "connectivity must be 4 or 8");
    if (seed_window < 3 || seed_window % 2 == 0)
        fail(errc::invalid_params, "seed_window must be odd and >= 3");
}

void Segmentation::validate() const {
    if (!(nucleus.r < outer.r))
        fail(errc::segmentation_failed, "nucleus radius not smaller than outer radius");
    const double dc = std::hypot(nucleus.cx - outer.cx, nucleus.cy - outer.cy);
    if (dc > outer.r)
        fail(errc::segmentation_failed, "nucleus center outside outer circle");
    if (!mask_subset(nucleus_mask, outer_mask))
        fail(errc::segmentation_failed, "nucleus mask not nested in outer mask");
}

namespace {

double bilinear(const RasterImage& img, double x, double y) {
    const double cx = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = std::min(static_cast<int>(cx), img.width - 2 >= 0 ? img.width - 2 : 0);
    const int y0 = std::min(static_cast<int>(cy), img.height - 2 >= 0 ? img.height - 2 : 0);
    const double fx = cx - x0;
    const double fy = cy - y0;
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    return (1 - fx) * (1 - fy) * img.at(x0, y0) + fx * (1 - fy) * img.at(x1, y0) +
           (1 - fx) * fy * img.at(x0, y1) + fx * fy * img.at(x1, y1);
}

/// Spec energy: sum of internal terms minus summed edge strength (raw
/// squared gradient of the smoothed image).
double snake_energy(const std::vector<Vec2>& v, const RasterImage& edge_raw, double alpha,
                    double beta) {
    const std::size_t n = v.size();
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& prev = v[(i + n - 1) % n];
        const Vec2& cur = v[i];
        const Vec2& next = v[(i + 1) % n];
        const double ex = next.x - cur.x;
        const double ey = next.y - cur.y;
        const double bx = next.x - 2.0 * cur.x + prev.x;
        const double by = next.y - 2.0 * cur.y + prev.y;
        e += alpha * (ex * ex + ey * ey) + beta * (bx * bx + by * by);
        e -= bilinear(edge_raw, cur.x, cur.y);
    }
    return e;
}

double enclosed_area(const std::vector<Vec2>& v) {
    const std::size_t n = v.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return std::abs(0.5 * acc);
}

std::vector<Vec2> resample_closed(const std::vector<Vec2>& v, int n_out) {
    const std::size_t n = v.size();
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % n];
        cum[i + 1] = cum[i] + std::hypot(b.x - a.x, b.y - a.y);
    }
    const double total = cum[n];
    if (total <= 0.0) return std::vector<Vec2>(n_out, v[0]);
    std::vector<Vec2> out(n_out);
    std::size_t seg = 0;
    for (int j = 0; j < n_out; ++j) {
        const double s = total * j / n_out;
        while (seg + 1 < n && cum[seg + 1] < s) ++seg;
        const double len = cum[seg + 1] - cum[seg];
        const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
        const Vec2& a = v[seg];
        const Vec2& b = v[(seg + 1) % n];
        out[j] = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    }
    return out;
}

} // namespace

SnakeResult snake_outer_boundary(const RasterImage& gray, const SnakeParams& p,
                                 const Contour* init) {
    p.validate();
    if (gray.channels != 1) fail(errc::invalid_params, "snake needs a grayscale image");
    const int w = gray.width;
    const int h = gray.height;

    // Edge strength P = |grad(G_sigma * I)|^2 drives the energy bookkeeping.
    // The force field ascends the normalized gradient magnitude sqrt(P/max);
    // the square root compresses the dynamic range so secondary boundaries
    // still exert a force comparable to the strongest edge, and the
    // normalization makes the balloon/edge balance contrast-independent.
    const RasterImage smooth = pre::gaussian_smooth(gray, p.sigma_ext);
    const RasterImage gx = pre::central_diff_x(smooth);
    const RasterImage gy = pre::central_diff_y(smooth);
    RasterImage edge_raw = RasterImage::make(w, h, 1);
    for (std::size_t i = 0; i < edge_raw.data.size(); ++i)
        edge_raw.data[i] = gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i];
    const double peak = *std::max_element(edge_raw.data.begin(), edge_raw.data.end());
    RasterImage edge_norm = edge_raw;
    if (peak > 0.0)
        for (double& v : edge_norm.data) v = std::sqrt(v / peak);
    const RasterImage fx = pre::central_diff_x(edge_norm);
    const RasterImage fy = pre::central_diff_y(edge_norm);

    std::vector<Vec2> pts;
    if (init != nullptr) {
        if (init->points.size() < 8) fail(errc::invalid_params, "init contour needs >= 8 points");
        pts = resample_closed(init->points, p.n_points);
    } else {
        const Circle c{(w - 1) / 2.0, (h - 1) / 2.0, 0.45 * std::min(w, h)};
        pts = circle_contour(c, p.n_points).points;
    }
    // Outward normal orientation from the initial winding; resampling keeps
    // the vertex order, so this is computed once.
    Contour tmp;
    tmp.points = pts;
    const double orient = polygon_signed_area(tmp) >= 0.0 ? 1.0 : -1.0;

    SnakeResult res;
    const int n = p.n_points;
    double area_prev = enclosed_area(pts);
    double energy_prev = snake_energy(pts, edge_raw, p.alpha, p.beta);
    int stall = 0;
    std::vector<Vec2> cand(n);

    for (int iter = 0; iter < p.max_iters; ++iter) {
        // Backtracking step: keep the first candidate that does not increase
        // the acceptance functional (energy without balloon, area with).
        double max_disp = 0.0;
        bool accepted = false;
        for (int half = 0; half < 5 && !accepted; ++half) {
            const double step = p.gamma * std::ldexp(1.0, -half);
            for (int i = 0; i < n; ++i) {
                const Vec2& prev = pts[(i + n - 1) % n];
                const Vec2& cur = pts[i];
                const Vec2& next = pts[(i + 1) % n];
                const Vec2& prev2 = pts[(i + n - 2) % n];
                const Vec2& next2 = pts[(i + 2) % n];
                const double d2x = next.x - 2.0 * cur.x + prev.x;
                const double d2y = next.y - 2.0 * cur.y + prev.y;
                const double d4x = prev2.x - 4.0 * prev.x + 6.0 * cur.x - 4.0 * next.x + next2.x;
                const double d4y = prev2.y - 4.0 * prev.y + 6.0 * cur.y - 4.0 * next.y + next2.y;
                const double tx = 0.5 * (next.x - prev.x);
                const double ty = 0.5 * (next.y - prev.y);
                const double tn = std::hypot(tx, ty);
                const double nx = tn > 0.0 ? orient * (ty / tn) : 0.0;
                const double ny = tn > 0.0 ? orient * (-tx / tn) : 0.0;
                const double ex = bilinear(fx, cur.x, cur.y);
                const double ey = bilinear(fy, cur.x, cur.y);
                double px = cur.x + step * (p.alpha * d2x - p.beta * d4x + ex + p.balloon * nx);
                double py = cur.y + step * (p.alpha * d2y - p.beta * d4y + ey + p.balloon * ny);
                cand[i] = {std::clamp(px, 0.0, static_cast<double>(w - 1)),
                           std::clamp(py, 0.0, static_cast<double>(h - 1))};
            }
            if (p.balloon == 0.0) {
                const double e = snake_energy(cand, edge_raw, p.alpha, p.beta);
                if (e <= energy_prev) accepted = true;
            } else {
                if (enclosed_area(cand) <= area_prev) accepted = true;
            }
        }

        if (accepted) {
            for (int i = 0; i < n; ++i) {
                max_disp = std::max(max_disp, std::hypot(cand[i].x - pts[i].x,
                                                         cand[i].y - pts[i].y));
            }
            pts.swap(cand);
            area_prev = enclosed_area(pts);
            energy_prev = snake_energy(pts, edge_raw, p.alpha, p.beta);
        }
        res.energy_trace.push_back(energy_prev);
        res.area_trace.push_back(area_prev);
        res.iterations = iter + 1;

        if (area_prev < 100.0)
            fail(errc::segmentation_failed, "contour collapsed (area below 100 px^2)");

        stall = max_disp < p.tol ? stall + 1 : 0;
        if (stall >= p.stall_iters) {
            res.converged = true;
            break;
        }

        if ((iter + 1) % 10 == 0 && iter + 1 < p.max_iters && !res.converged) {
            pts = resample_closed(pts, n);
            area_prev = enclosed_area(pts);
            energy_prev = snake_energy(pts, edge_raw, p.alpha, p.beta);
            res.resample_iters.push_back(iter);
        }
    }

    res.contour.points = std::move(pts);
    return res;
}

Circle fit_circle(const std::vector<Vec2>& points) {
    if (points.size() < 3) fail(errc::degenerate_fit, "circle fit needs >= 3 points");
    const std::size_t n = points.size();

    // Kasa system in centroid-shifted coordinates (same minimizer, far
    // better conditioned): solve the 3x3 normal equations of
    // (x^2+y^2) + D x + E y + F = 0.
    double mx = 0.0, my = 0.0;
    for (const Vec2& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0, s1 = static_cast<double>(n);
    double sxz = 0, syz = 0, sz = 0;
    for (const Vec2& p : points) {
        const double x = p.x - mx;
        const double y = p.y - my;
        const double z = x * x + y * y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sx += x;
        sy += y;
        sxz += x * z;
        syz += y * z;
        sz += z;
    }

    // Normal matrix A and right-hand side b for unknowns (D, E, F) with the
    // residual z + D x + E y + F.
    const double A[3][3] = {{sxx, sxy, sx}, {sxy, syy, sy}, {sx, sy, s1}};
    const double b[3] = {-sxz, -syz, -sz};

    // 3x3 solve by adjugate; the condition estimate uses Frobenius norms.
    const double c00 = A[1][1] * A[2][2] - A[1][2] * A[2][1];
    const double c01 = A[1][2] * A[2][0] - A[1][0] * A[2][2];
    const double c02 = A[1][0] * A[2][1] - A[1][1] * A[2][0];
    const double det = A[0][0] * c00 + A[0][1] * c01 + A[0][2] * c02;
    const double inv[3][3] = {
        {c00, A[0][2] * A[2][1] - A[0][1] * A[2][2], A[0][1] * A[1][2] - A[0][2] * A[1][1]},
        {c01, A[0][0] * A[2][2] - A[0][2] * A[2][0], A[0][2] * A[1][0] - A[0][0] * A[1][2]},
        {c02, A[0][1] * A[2][0] - A[0][0] * A[2][1], A[0][0] * A[1][1] - A[0][1] * A[1][0]}};

    double norm_a = 0.0, norm_inv = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            norm_a += A[i][j] * A[i][j];
            norm_inv += inv[i][j] * inv[i][j];
        }
    if (det == 0.0 || std::sqrt(norm_a) * std::sqrt(norm_inv) / std::abs(det) > 1e12)
        fail(errc::degenerate_fit, "points are collinear or nearly so");

    double sol[3];
    for (int i = 0; i < 3; ++i)
        sol[i] = (inv[0][i] * b[0] + inv[1][i] * b[1] + inv[2][i] * b[2]) / det;

    const double dd = sol[0];
    const double ee = sol[1];
    const double ff = sol[2];
    const double r2 = 0.25 * (dd * dd + ee * ee) - ff;
    if (!(r2 > 0.0)) fail(errc::degenerate_fit, "non-positive fitted radius");
    return Circle{-0.5 * dd + mx, -0.5 * ee + my, std::sqrt(r2)};
}

BitMask region_grow_nucleus(const RasterImage& gray, Vec2 seed, const Circle& bound,
                            const RegionGrowParams& p) {
    p.validate();
    if (gray.channels != 1) fail(errc::invalid_params, "region growing needs grayscale");
    const int w = gray.width;
    const int h = gray.height;
    const int sx = static_cast<int>(std::lround(seed.x));
    const int sy = static_cast<int>(std::lround(seed.y));
    if (sx < 0 || sx >= w || sy < 0 || sy >= h)
        fail(errc::invalid_seed, "seed outside image");
    const double seed_d2 = (sx - bound.cx) * (sx - bound.cx) + (sy - bound.cy) * (sy - bound.cy);
    if (seed_d2 > bound.r * bound.r) fail(errc::invalid_seed, "seed outside bound circle");

    const BitMask inside = rasterize_circle(bound, w, h);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (inside.get(x, y)) {
                lo = std::min(lo, gray.at(x, y));
                hi = std::max(hi, gray.at(x, y));
            }
    const double tau_abs = p.tau * (hi - lo);

    const int half = p.seed_window / 2;
    double mean = 0.0;
    int count = 0;
    for (int y = std::max(0, sy - half); y <= std::min(h - 1, sy + half); ++y)
        for (int x = std::max(0, sx - half); x <= std::min(w - 1, sx + half); ++x) {
            mean += gray.at(x, y);
            ++count;
        }
    mean /= count;

    static const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    const int n_dirs = p.connectivity == 4 ? 4 : 8;

    BitMask out = BitMask::make(w, h);
    std::deque<std::pair<int, int>> queue;
    out.set(sx, sy, true);
    queue.emplace_back(sx, sy);
    while (!queue.empty()) {
        const auto [cx, cy] = queue.front();
        queue.pop_front();
        for (int d = 0; d < n_dirs; ++d) {
            const int nx = cx + dx8[d];
            const int ny = cy + dy8[d];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            if (out.get(nx, ny) || !inside.get(nx, ny)) continue;
            if (std::abs(gray.at(nx, ny) - mean) > tau_abs) continue;
            out.set(nx, ny, true);
            queue.emplace_back(nx, ny);
        }
    }
    return out;
}

std::vector<Vec2> mask_boundary_points(const BitMask& mask) {
    std::vector<Vec2> pts;
    static const int dx4[] = {1, -1, 0, 0};
    static const int dy4[] = {0, 0, 1, -1};
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.get(x, y)) continue;
            bool boundary = false;
            for (int d = 0; d < 4 && !boundary; ++d) {
                const int nx = x + dx4[d];
                const int ny = y + dy4[d];
                if (!mask.in_bounds(nx, ny) || !mask.get(nx, ny)) boundary = true;
            }
            if (boundary) pts.push_back({static_cast<double>(x), static_cast<double>(y)});
        }
    return pts;
}

Segmentation segment(const RasterImage& img, const SegmentationConfig& cfg) {
    img.validate_entry();
    RasterImage gray = img;
    if (img.channels == 3) {
        gray = cfg.apply_white_balance ? pre::to_grayscale(pre::gray_world_balance(img))
                                       : pre::to_grayscale(img);
    }
    const RasterImage diffused = pre::anisotropic_diffuse(gray, cfg.diffusion);

    const SnakeResult snake = snake_outer_boundary(diffused, cfg.snake);
    const Circle outer = fit_circle(snake.contour.points);
    if (outer.cx < 0 || outer.cx > img.width - 1 || outer.cy < 0 || outer.cy > img.height - 1)
        fail(errc::segmentation_failed, "fitted outer center outside image");

    BitMask rg;
    try {
        rg = region_grow_nucleus(diffused, {outer.cx, outer.cy}, outer, cfg.region_grow);
    } catch (const Error& e) {
        if (e.kind() == errc::invalid_seed)
            fail(errc::segmentation_failed, std::string("nucleus seeding failed: ") + e.what());
        throw;
    }

    Circle nucleus = fit_circle(mask_boundary_points(rg));
    Segmentation s;
    s.nucleus_clamped = false;
    if (nucleus.r >= outer.r) {
        nucleus.r = 0.9 * outer.r;
        s.nucleus_clamped = true;
    }

    s.outer = outer;
    s.nucleus = nucleus;
    s.outer_mask = rasterize_circle(outer, img.width, img.height);
    s.nucleus_mask = mask_and(rasterize_circle(nucleus, img.width, img.height), s.outer_mask);
    s.snake_contour = snake.contour;
    s.converged = snake.converged;
    s.iterations_used = snake.iterations;
    s.validate();
    return s;
}

} // namespace coc::seg
