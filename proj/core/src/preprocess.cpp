#include "coc/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "coc/error.hpp"

namespace coc::pre {

void DiffusionParams::validate() const {
    if (iterations < 0) fail(errc::invalid_params, "diffusion iterations must be >= 0");
    if (!(kappa > 0.0)) fail(errc::invalid_params, "diffusion kappa must be > 0");
    if (!(lambda > 0.0) || lambda > 0.25)
        fail(errc::invalid_params, "diffusion lambda must be in (0, 0.25]");
}

RasterImage gray_world_balance(const RasterImage& img) {
    if (img.channels != 3) fail(errc::invalid_params, "white balance needs 3 channels");
    const std::size_t n = img.pixel_count();
    double mean[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) mean[c] += img.data[i * 3 + c];
    for (int c = 0; c < 3; ++c) {
        mean[c] /= static_cast<double>(n);
        if (mean[c] == 0.0) fail(errc::degenerate_channel, "channel mean is zero");
    }
    const double target = (mean[0] + mean[1] + mean[2]) / 3.0;
    RasterImage out = img;
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
            out.data[i * 3 + c] =
                std::clamp(img.data[i * 3 + c] * (target / mean[c]), 0.0, 1.0);
    return out;
}

RasterImage to_grayscale(const RasterImage& img) {
    if (img.channels != 3) fail(errc::invalid_params, "grayscale conversion needs 3 channels");
    RasterImage out = RasterImage::make(img.width, img.height, 1);
    const std::size_t n = img.pixel_count();
    for (std::size_t i = 0; i < n; ++i)
        out.data[i] = 0.299 * img.data[i * 3] + 0.587 * img.data[i * 3 + 1] +
                      0.114 * img.data[i * 3 + 2];
    return out;
}

RasterImage anisotropic_diffuse(const RasterImage& img, const DiffusionParams& p) {
    p.validate();
    if (img.channels != 1) fail(errc::invalid_params, "diffusion needs a grayscale image");
    const int w = img.width;
    const int h = img.height;
    RasterImage cur = img;
    RasterImage next = img;
    const double inv_k2 = 1.0 / (p.kappa * p.kappa);

    for (int it = 0; it < p.iterations; ++it) {
        for (int y = 0; y < h; ++y) {
            const int yn = std::max(0, y - 1);
            const int ys = std::min(h - 1, y + 1);
            for (int x = 0; x < w; ++x) {
                const int xw = std::max(0, x - 1);
                const int xe = std::min(w - 1, x + 1);
                const double v = cur.at(x, y);
                const double dn = cur.at(x, yn) - v;
                const double ds = cur.at(x, ys) - v;
                const double de = cur.at(xe, y) - v;
                const double dw = cur.at(xw, y) - v;
                // North/south and east/west fluxes are paired before the
                // final add so mirroring the image commutes bit-for-bit.
                const double flux_ns =
                    std::exp(-dn * dn * inv_k2) * dn + std::exp(-ds * ds * inv_k2) * ds;
                const double flux_ew =
                    std::exp(-de * de * inv_k2) * de + std::exp(-dw * dw * inv_k2) * dw;
                next.at(x, y) = v + p.lambda * (flux_ns + flux_ew);
            }
        }
        std::swap(cur, next);
    }
    return cur;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) fail(errc::invalid_params, "sigma must be > 0");
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-0.5 * (i / sigma) * (i / sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;
    return k;
}

static RasterImage convolve_1d(const RasterImage& img, const std::vector<double>& k,
                               bool horizontal) {
    const int radius = static_cast<int>(k.size() / 2);
    RasterImage out = RasterImage::make(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xs = horizontal ? std::clamp(x + i, 0, img.width - 1) : x;
                const int ys = horizontal ? y : std::clamp(y + i, 0, img.height - 1);
                acc += k[i + radius] * img.at(xs, ys);
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

RasterImage gaussian_smooth(const RasterImage& img, double sigma) {
    if (img.channels != 1) fail(errc::invalid_params, "smoothing needs a grayscale image");
    const std::vector<double> k = gaussian_kernel(sigma);
    return convolve_1d(convolve_1d(img, k, true), k, false);
}

RasterImage central_diff_x(const RasterImage& img) {
    RasterImage out = RasterImage::make(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const int xe = std::min(img.width - 1, x + 1);
            const int xw = std::max(0, x - 1);
            out.at(x, y) = 0.5 * (img.at(xe, y) - img.at(xw, y));
        }
    return out;
}

RasterImage central_diff_y(const RasterImage& img) {
    RasterImage out = RasterImage::make(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const int ys = std::min(img.height - 1, y + 1);
            const int yn = std::max(0, y - 1);
            out.at(x, y) = 0.5 * (img.at(x, ys) - img.at(x, yn));
        }
    return out;
}

RasterImage gradient_magnitude(const RasterImage& img) {
    if (img.channels != 1) fail(errc::invalid_params, "gradient needs a grayscale image");
    const RasterImage gx = central_diff_x(img);
    const RasterImage gy = central_diff_y(img);
    RasterImage out = RasterImage::make(img.width, img.height, 1);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::hypot(gx.data[i], gy.data[i]);
    return out;
}

} // namespace coc::pre
