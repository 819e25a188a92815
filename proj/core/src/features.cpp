#include "coc/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <limits>

#include "coc/error.hpp"
#include "coc/preprocess.hpp"

namespace coc::feat {

namespace {
constexpr double kEps = 1e-9;
}

const std::array<FeatureInfo, kFeatureCount>& feature_layout() {
    using G = FeatureGroup;
    using R = FeatureRegion;
    static const std::array<FeatureInfo, kFeatureCount> table = {{
        {"outer_radius_rel", G::contour, R::cell},            // f1
        {"nucleus_radius_rel", G::contour, R::nucleus},       // f2
        {"radius_ratio", G::contour, R::global},              // f3
        {"cell_area_frac", G::contour, R::cell},              // f4
        {"nucleus_area_frac", G::contour, R::nucleus},        // f5
        {"border_distance_rel", G::contour, R::global},       // f6
        {"annulus_mean", G::contour, R::annulus},             // f7
        {"annulus_std", G::contour, R::annulus},              // f8
        {"nucleus_mean", G::contour, R::nucleus},             // f9
        {"nucleus_std", G::contour, R::nucleus},              // f10
        {"nucleus_annulus_ratio", G::contour, R::global},     // f11
        {"edge_component_density", G::contour, R::annulus},   // f12
        {"edge_component_mean_size", G::contour, R::annulus}, // f13
        {"edge_component_max_size", G::contour, R::annulus},  // f14
        {"edge_pixel_density", G::contour, R::annulus},       // f15
        {"grad_mean", G::texture, R::annulus},                // f16
        {"grad_std", G::texture, R::annulus},                 // f17
        {"log2_mean", G::texture, R::annulus},                // f18
        {"log2_std", G::texture, R::annulus},                 // f19
        {"log4_mean", G::texture, R::annulus},                // f20
        {"log4_std", G::texture, R::annulus},                 // f21
        {"lbp_energy_annulus", G::texture, R::annulus},       // f22
        {"lbp_entropy_annulus", G::texture, R::annulus},      // f23
        {"lbp_energy_cell", G::texture, R::cell},             // f24
        {"lbp_entropy_cell", G::texture, R::cell},            // f25
        {"haar_2h_full", G::texture, R::global},              // f26
        {"haar_2v_full", G::texture, R::global},              // f27
        {"haar_2h_half", G::texture, R::global},              // f28
        {"haar_2v_half", G::texture, R::global},              // f29
        {"haar_3h_full", G::texture, R::global},              // f30
        {"haar_4checker_full", G::texture, R::global},        // f31
    }};
    return table;
}

RasterImage log_filter(const RasterImage& img, double sigma) {
    const RasterImage smooth = pre::gaussian_smooth(img, sigma);
    RasterImage out = RasterImage::make(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        const int yn = std::max(0, y - 1);
        const int ys = std::min(img.height - 1, y + 1);
        for (int x = 0; x < img.width; ++x) {
            const int xw = std::max(0, x - 1);
            const int xe = std::min(img.width - 1, x + 1);
            out.at(x, y) = smooth.at(xe, y) + smooth.at(xw, y) + smooth.at(x, yn) +
                           smooth.at(x, ys) - 4.0 * smooth.at(x, y);
        }
    }
    return out;
}

std::uint8_t lbp_code_at(const RasterImage& gray, int x, int y) {
    // Neighbors in circular order E, NE, N, NW, W, SW, S, SE.
    static const int nx[] = {1, 1, 0, -1, -1, -1, 0, 1};
    static const int ny[] = {0, -1, -1, -1, 0, 1, 1, 1};
    const double center = gray.at(x, y);
    std::uint8_t code = 0;
    for (int k = 0; k < 8; ++k)
        if (gray.at(x + nx[k], y + ny[k]) >= center) code |= static_cast<std::uint8_t>(1u << k);
    return code;
}

int lbp_uniform_bin(std::uint8_t code) {
    static const auto table = [] {
        std::array<int, 256> t{};
        int next = 0;
        for (int c = 0; c < 256; ++c) {
            const std::uint8_t v = static_cast<std::uint8_t>(c);
            const std::uint8_t rot = static_cast<std::uint8_t>((v << 1) | (v >> 7));
            const int transitions = std::popcount(static_cast<unsigned>(v ^ rot) & 0xFFu);
            t[c] = transitions <= 2 ? next++ : -1;
        }
        for (int c = 0; c < 256; ++c)
            if (t[c] < 0) t[c] = kLbpBins - 1;
        return t;
    }();
    return table[code];
}

std::array<double, kLbpBins> lbp_histogram(const RasterImage& gray, const BitMask& region) {
    if (gray.width != region.width || gray.height != region.height)
        fail(errc::shape_mismatch, "LBP region does not match image");
    std::array<double, kLbpBins> hist{};
    std::size_t n = 0;
    for (int y = 1; y < gray.height - 1; ++y)
        for (int x = 1; x < gray.width - 1; ++x) {
            if (!region.get(x, y)) continue;
            ++hist[lbp_uniform_bin(lbp_code_at(gray, x, y))];
            ++n;
        }
    if (n == 0) fail(errc::empty_region, "no interior pixels for LBP");
    for (double& v : hist) v /= static_cast<double>(n);
    return hist;
}

IntegralImage IntegralImage::build(const RasterImage& gray) {
    IntegralImage ii;
    ii.width = gray.width;
    ii.height = gray.height;
    ii.table.assign(static_cast<std::size_t>(gray.width + 1) * (gray.height + 1), 0.0);
    const int stride = gray.width + 1;
    for (int y = 0; y < gray.height; ++y) {
        double row = 0.0;
        for (int x = 0; x < gray.width; ++x) {
            row += gray.at(x, y);
            ii.table[static_cast<std::size_t>(y + 1) * stride + (x + 1)] =
                ii.table[static_cast<std::size_t>(y) * stride + (x + 1)] + row;
        }
    }
    return ii;
}

double IntegralImage::sum(int x0, int y0, int x1, int y1) const {
    const int stride = width + 1;
    auto at = [&](int x, int y) { return table[static_cast<std::size_t>(y) * stride + x]; };
    return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
}

namespace {

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t n = 0;
};

Stats masked_stats(const RasterImage& img, const BitMask& mask) {
    double sum = 0.0;
    std::size_t n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (mask.get(x, y)) {
                sum += img.at(x, y);
                ++n;
            }
    Stats s;
    s.n = n;
    if (n == 0) return s;
    s.mean = sum / static_cast<double>(n);
    // Two-pass deviations; exact zero on constant regions.
    double var = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (mask.get(x, y)) {
                const double d = img.at(x, y) - s.mean;
                var += d * d;
            }
    s.stddev = std::sqrt(var / static_cast<double>(n));
    return s;
}

/// Otsu threshold over the given values, 256 bins spanning [min, max].
/// Returns max when the values are all equal, so nothing exceeds it.
double otsu_threshold(const std::vector<double>& values) {
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) return hi;

    constexpr int kBins = 256;
    std::array<double, kBins> hist{};
    for (double v : values) {
        int b = static_cast<int>((v - lo) / (hi - lo) * kBins);
        hist[std::clamp(b, 0, kBins - 1)] += 1.0;
    }
    const double total = static_cast<double>(values.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += b * hist[b];

    double w0 = 0.0, sum0 = 0.0, best = -1.0;
    int best_k = kBins - 1;
    for (int k = 0; k < kBins - 1; ++k) {
        w0 += hist[k];
        if (w0 == 0.0) continue;
        const double w1 = total - w0;
        if (w1 == 0.0) break;
        sum0 += k * hist[k];
        const double m0 = sum0 / w0;
        const double m1 = (sum_all - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_k = k;
        }
    }
    return lo + (hi - lo) * (best_k + 1) / kBins;
}

struct EdgeComponents {
    std::size_t edge_pixels = 0;
    std::size_t n_components = 0;
    double mean_size = 0.0;
    std::size_t max_size = 0;
};

EdgeComponents edge_components_in(const RasterImage& grad, const BitMask& annulus) {
    std::vector<double> vals;
    vals.reserve(annulus.count());
    for (int y = 0; y < grad.height; ++y)
        for (int x = 0; x < grad.width; ++x)
            if (annulus.get(x, y)) vals.push_back(grad.at(x, y));
    EdgeComponents out;
    if (vals.empty()) return out;
    const double t = otsu_threshold(vals);

    BitMask edge = BitMask::make(grad.width, grad.height);
    for (int y = 0; y < grad.height; ++y)
        for (int x = 0; x < grad.width; ++x)
            if (annulus.get(x, y) && grad.at(x, y) > t) {
                edge.set(x, y, true);
                ++out.edge_pixels;
            }

    static const int dx8[] = {1, -1, 0, 0, 1, 1, -1, -1};
    static const int dy8[] = {0, 0, 1, -1, 1, -1, 1, -1};
    BitMask seen = BitMask::make(grad.width, grad.height);
    std::size_t total_size = 0;
    for (int y = 0; y < grad.height; ++y)
        for (int x = 0; x < grad.width; ++x) {
            if (!edge.get(x, y) || seen.get(x, y)) continue;
            std::size_t size = 0;
            std::deque<std::pair<int, int>> queue{{x, y}};
            seen.set(x, y, true);
            while (!queue.empty()) {
                const auto [cx, cy] = queue.front();
                queue.pop_front();
                ++size;
                for (int d = 0; d < 8; ++d) {
                    const int nx = cx + dx8[d];
                    const int ny = cy + dy8[d];
                    if (nx < 0 || nx >= grad.width || ny < 0 || ny >= grad.height) continue;
                    if (!edge.get(nx, ny) || seen.get(nx, ny)) continue;
                    seen.set(nx, ny, true);
                    queue.emplace_back(nx, ny);
                }
            }
            ++out.n_components;
            total_size += size;
            out.max_size = std::max(out.max_size, size);
        }
    if (out.n_components > 0)
        out.mean_size = static_cast<double>(total_size) / static_cast<double>(out.n_components);
    return out;
}

RasterImage ensure_gray(const RasterImage& img) {
    return img.channels == 3 ? pre::to_grayscale(img) : img;
}

BitMask annulus_of(const seg::Segmentation& s) {
    return mask_subtract(s.outer_mask, s.nucleus_mask);
}

/// Haar-like response templates over the integral image. The window is
/// centered on (cx, cy), clipped to the image, then trimmed so its width and
/// height are divisible as the template requires; responses are normalized
/// by the window pixel count. Sign conventions: horizontal = right minus
/// left, vertical = bottom minus top, 3-rect = outer thirds minus twice the
/// middle, checkerboard = main diagonal minus anti-diagonal.
double haar_response(const IntegralImage& ii, int cx, int cy, int side, int kind) {
    int x0 = std::max(0, cx - side / 2);
    int y0 = std::max(0, cy - side / 2);
    int x1 = std::min(ii.width - 1, x0 + side - 1);
    int y1 = std::min(ii.height - 1, y0 + side - 1);
    if (x1 < x0 || y1 < y0) return 0.0;

    const int div_x = (kind == 0 || kind == 2) ? 2 : (kind == 4 ? 3 : (kind == 5 ? 2 : 1));
    const int div_y = (kind == 1 || kind == 3 || kind == 5) ? 2 : 1;
    int wdt = (x1 - x0 + 1) / div_x * div_x;
    int hgt = (y1 - y0 + 1) / div_y * div_y;
    if (wdt < div_x || hgt < div_y) return 0.0;
    x1 = x0 + wdt - 1;
    y1 = y0 + hgt - 1;
    const double area = static_cast<double>(wdt) * hgt;

    switch (kind) {
        case 0:
        case 2: { // 2-rect horizontal
            const int mx = x0 + wdt / 2;
            return (ii.sum(mx, y0, x1, y1) - ii.sum(x0, y0, mx - 1, y1)) / area;
        }
        case 1:
        case 3: { // 2-rect vertical
            const int my = y0 + hgt / 2;
            return (ii.sum(x0, my, x1, y1) - ii.sum(x0, y0, x1, my - 1)) / area;
        }
        case 4: { // 3-rect horizontal
            const int third = wdt / 3;
            const double left = ii.sum(x0, y0, x0 + third - 1, y1);
            const double mid = ii.sum(x0 + third, y0, x0 + 2 * third - 1, y1);
            const double right = ii.sum(x0 + 2 * third, y0, x1, y1);
            return (left + right - 2.0 * mid) / area;
        }
        case 5: { // 4-rect checkerboard
            const int mx = x0 + wdt / 2;
            const int my = y0 + hgt / 2;
            const double tl = ii.sum(x0, y0, mx - 1, my - 1);
            const double tr = ii.sum(mx, y0, x1, my - 1);
            const double bl = ii.sum(x0, my, mx - 1, y1);
            const double br = ii.sum(mx, my, x1, y1);
            return (tl + br - tr - bl) / area;
        }
    }
    return 0.0;
}

double lbp_energy(const std::array<double, kLbpBins>& h) {
    double e = 0.0;
    for (double p : h) e += p * p;
    return e;
}

double lbp_entropy(const std::array<double, kLbpBins>& h) {
    double e = 0.0;
    for (double p : h)
        if (p > 0.0) e -= p * std::log(p);
    return e;
}

} // namespace

std::array<double, kContourFeatureCount> contour_features(const RasterImage& img,
                                                          const seg::Segmentation& s) {
    const RasterImage gray = ensure_gray(img);
    const int w = gray.width;
    const int h = gray.height;
    const double min_side = static_cast<double>(std::min(w, h));

    const BitMask annulus = annulus_of(s);
    const double annulus_area = static_cast<double>(annulus.count());
    if (annulus_area == 0.0) fail(errc::empty_region, "annulus has no pixels");
    const double outer_area = static_cast<double>(s.outer_mask.count());
    const double nucleus_area = static_cast<double>(s.nucleus_mask.count());

    std::array<double, kContourFeatureCount> f{};
    f[0] = s.outer.r / min_side;
    f[1] = s.nucleus.r / min_side;
    f[2] = s.nucleus.r / s.outer.r;
    f[3] = outer_area / (static_cast<double>(w) * h);
    f[4] = nucleus_area / std::max(outer_area, 1.0);

    const double border = std::min(std::min(s.outer.cx - s.outer.r, s.outer.cy - s.outer.r),
                                   std::min((w - 1) - s.outer.cx - s.outer.r,
                                            (h - 1) - s.outer.cy - s.outer.r));
    f[5] = std::max(0.0, border) / (min_side / 2.0);

    const Stats ann = masked_stats(gray, annulus);
    const Stats nuc = masked_stats(gray, s.nucleus_mask);
    f[6] = ann.mean;
    f[7] = ann.stddev;
    f[8] = nuc.mean;
    f[9] = nuc.stddev;
    f[10] = nuc.mean / std::max(ann.mean, kEps);

    const RasterImage grad = pre::gradient_magnitude(gray);
    const EdgeComponents ec = edge_components_in(grad, annulus);
    f[11] = 1000.0 * static_cast<double>(ec.n_components) / annulus_area;
    f[12] = ec.mean_size / annulus_area;
    f[13] = static_cast<double>(ec.max_size) / annulus_area;
    f[14] = static_cast<double>(ec.edge_pixels) / annulus_area;
    return f;
}

std::array<double, kTextureFeatureCount> texture_features(const RasterImage& img,
                                                          const seg::Segmentation& s,
                                                          const FeatureParams& p) {
    const RasterImage gray = ensure_gray(img);
    const BitMask annulus = annulus_of(s);
    if (annulus.count() == 0) fail(errc::empty_region, "annulus has no pixels");

    std::array<double, kTextureFeatureCount> f{};
    const RasterImage grad = pre::gradient_magnitude(gray);
    const Stats g = masked_stats(grad, annulus);
    f[0] = g.mean;
    f[1] = g.stddev;

    const Stats l2 = masked_stats(log_filter(gray, p.log_sigma_small), annulus);
    f[2] = l2.mean;
    f[3] = l2.stddev;
    const Stats l4 = masked_stats(log_filter(gray, p.log_sigma_large), annulus);
    f[4] = l4.mean;
    f[5] = l4.stddev;

    const auto hist_ann = lbp_histogram(gray, annulus);
    f[6] = lbp_energy(hist_ann);
    f[7] = lbp_entropy(hist_ann);
    const auto hist_cell = lbp_histogram(gray, s.outer_mask);
    f[8] = lbp_energy(hist_cell);
    f[9] = lbp_entropy(hist_cell);

    const IntegralImage ii = IntegralImage::build(gray);
    const int cx = static_cast<int>(std::lround(s.nucleus.cx));
    const int cy = static_cast<int>(std::lround(s.nucleus.cy));
    const int side = std::max(2, static_cast<int>(std::lround(p.haar_window_factor * s.outer.r)));
    const int half = std::max(2, side / 2);
    f[10] = haar_response(ii, cx, cy, side, 0);
    f[11] = haar_response(ii, cx, cy, side, 1);
    f[12] = haar_response(ii, cx, cy, half, 2);
    f[13] = haar_response(ii, cx, cy, half, 3);
    f[14] = haar_response(ii, cx, cy, side, 4);
    f[15] = haar_response(ii, cx, cy, side, 5);
    return f;
}

std::vector<std::array<double, kTextureFeatureCount>> texture_features_at(
    const RasterImage& img, const seg::Segmentation& s,
    const std::vector<std::pair<int, int>>& points, int window, const FeatureParams& p) {
    const RasterImage gray = ensure_gray(img);
    const RasterImage grad = pre::gradient_magnitude(gray);
    const RasterImage log_s = log_filter(gray, p.log_sigma_small);
    const RasterImage log_l = log_filter(gray, p.log_sigma_large);
    const IntegralImage ii = IntegralImage::build(gray);
    const int side = std::max(2, static_cast<int>(std::lround(p.haar_window_factor * s.outer.r)));
    const int halfside = std::max(2, side / 2);
    const int half = window / 2;

    auto window_stats = [&](const RasterImage& field, int px, int py) {
        double sum = 0.0;
        int n = 0;
        const int y0 = std::max(0, py - half), y1 = std::min(gray.height - 1, py + half);
        const int x0 = std::max(0, px - half), x1 = std::min(gray.width - 1, px + half);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                sum += field.at(x, y);
                ++n;
            }
        Stats st;
        st.n = static_cast<std::size_t>(n);
        if (n == 0) return st;
        st.mean = sum / n;
        double var = 0.0;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double d = field.at(x, y) - st.mean;
                var += d * d;
            }
        st.stddev = std::sqrt(var / n);
        return st;
    };

    std::vector<std::array<double, kTextureFeatureCount>> out;
    out.reserve(points.size());
    for (const auto& [px, py] : points) {
        std::array<double, kTextureFeatureCount> f{};
        const Stats g = window_stats(grad, px, py);
        if (g.n == 0) fail(errc::empty_region, "window has no pixels");
        f[0] = g.mean;
        f[1] = g.stddev;
        const Stats l2 = window_stats(log_s, px, py);
        f[2] = l2.mean;
        f[3] = l2.stddev;
        const Stats l4 = window_stats(log_l, px, py);
        f[4] = l4.mean;
        f[5] = l4.stddev;

        std::array<double, kLbpBins> hist{};
        std::size_t n_lbp = 0;
        for (int y = std::max(1, py - half); y <= std::min(gray.height - 2, py + half); ++y)
            for (int x = std::max(1, px - half); x <= std::min(gray.width - 2, px + half); ++x) {
                ++hist[lbp_uniform_bin(lbp_code_at(gray, x, y))];
                ++n_lbp;
            }
        if (n_lbp == 0) fail(errc::empty_region, "window has no interior pixels for LBP");
        for (double& v : hist) v /= static_cast<double>(n_lbp);
        f[6] = lbp_energy(hist);
        f[7] = lbp_entropy(hist);
        f[8] = f[6];
        f[9] = f[7];

        f[10] = haar_response(ii, px, py, side, 0);
        f[11] = haar_response(ii, px, py, side, 1);
        f[12] = haar_response(ii, px, py, halfside, 2);
        f[13] = haar_response(ii, px, py, halfside, 3);
        f[14] = haar_response(ii, px, py, side, 4);
        f[15] = haar_response(ii, px, py, side, 5);
        out.push_back(f);
    }
    return out;
}

FeatureVector extract(const RasterImage& img, const seg::Segmentation& s,
                      const FeatureParams& p) {
    const auto contour = contour_features(img, s);
    const auto texture = texture_features(img, s, p);
    FeatureVector v;
    std::copy(contour.begin(), contour.end(), v.values.begin());
    std::copy(texture.begin(), texture.end(), v.values.begin() + kContourFeatureCount);
    for (double x : v.values)
        if (!std::isfinite(x)) fail(errc::invalid_data, "non-finite feature value");
    return v;
}

} // namespace coc::feat
