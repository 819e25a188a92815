#include "coc/synthdata.hpp"

#include <algorithm>
#include <cmath>

#include "coc/error.hpp"
#include "coc/preprocess.hpp"
#include "coc/rng.hpp"

namespace coc::synth {

void PhantomSpec::validate() const {
    if (side < 128) fail(errc::invalid_params, "phantom side must be >= 128");
    if (!(noise_sigma >= 0.0) || noise_sigma > 0.1)
        fail(errc::invalid_params, "noise sigma must be in [0, 0.1]");
    if (!(contrast > 0.0) || contrast > 1.0)
        fail(errc::invalid_params, "contrast must be in (0, 1]");
}

namespace {

/// Cumulus annulus thickness as a fraction of the ooplasm radius.
double grade_thickness(Grade g) {
    switch (g) {
        case Grade::A: return 0.50;
        case Grade::B: return 0.30;
        case Grade::C: return 0.12;
        case Grade::D: return 0.03;
    }
    return 0.0;
}

/// Zero-mean unit-variance smoothed noise field.
RasterImage noise_field(int side, double sigma, Rng& rng) {
    RasterImage f = RasterImage::make(side, side, 1);
    for (double& v : f.data) v = rng.next_gaussian();
    f = pre::gaussian_smooth(f, sigma);
    double mean = 0.0;
    for (double v : f.data) mean += v;
    mean /= static_cast<double>(f.data.size());
    double var = 0.0;
    for (double v : f.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(f.data.size());
    const double inv = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
    for (double& v : f.data) v = (v - mean) * inv;
    return f;
}

/// 1 deep inside radius r, 0 outside, smooth over a `width`-px shell.
double inside_weight(double d, double r, double width) {
    const double s = std::clamp((d - (r - 0.5 * width)) / width, 0.0, 1.0);
    return 1.0 - (3.0 * s * s - 2.0 * s * s * s);
}

} // namespace

Phantom generate(const PhantomSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int side = spec.side;

    // Geometry, jittered by seed. Healthier grades get slightly larger
    // oocytes (base fractions straddle 0.22 and overlap heavily after
    // jitter), so the absolute radii carry a weak class signal of their own.
    double base_frac = 0.22;
    switch (spec.grade) {
        case Grade::A: base_frac = 0.232; break;
        case Grade::B: base_frac = 0.212; break;
        case Grade::C: base_frac = 0.200; break;
        case Grade::D: base_frac = 0.174; break;
    }
    const double r_cell = base_frac * side * (1.0 + 0.1 * rng.next_signed_unit());
    const double cx = (side - 1) / 2.0 + 0.05 * side * rng.next_signed_unit();
    const double cy = (side - 1) / 2.0 + 0.05 * side * rng.next_signed_unit();
    const double r_nuc = 0.45 * r_cell;
    const double thickness = grade_thickness(spec.grade) * r_cell;
    const double r_out = r_cell + thickness;

    // Texture parameters carry the class signal but are jittered with
    // overlapping ranges, so texture alone separates the grades only
    // partially; the clean separators are the geometric ratios. The jitters
    // are drawn for every grade in the same order, so phantoms with equal
    // seeds share their structural randomness across grades.
    const double jit_scale = rng.next_signed_unit();
    const double jit_amp = rng.next_signed_unit();
    const double jit_mottle = rng.next_signed_unit();
    const double jit_gain = rng.next_signed_unit();
    // Optical focus varies between acquisitions: all structural edges share
    // a per-phantom transition width.
    const double edge_width = 1.75 + 0.45 * rng.next_signed_unit();

    double speckle_sigma = 3.0; // B ripple / D patch scale
    if (spec.grade == Grade::A) speckle_sigma = 2.0 + 0.7 * jit_scale;
    if (spec.grade == Grade::C) speckle_sigma = 2.3 + 0.7 * jit_scale;
    const double granule_amp = 0.04 + 0.03 * jit_amp;
    const double ripple_amp = 0.02 + 0.012 * jit_amp;

    // Mild, grade-independent mottling for A-C; strong fixed heterogeneity
    // is the grade-D trait.
    const double mottle_amp =
        spec.grade == Grade::D ? 0.11 + 0.03 * jit_mottle : 0.04 + 0.02 * jit_mottle;

    const RasterImage speckle = noise_field(side, speckle_sigma, rng);
    const RasterImage mottle = noise_field(side, 3.0, rng);

    // Per-phantom illumination: every intensity separation scales by the
    // same factor, mimicking exposure variation between acquisitions.
    const double k = spec.contrast * (0.95 + 0.25 * jit_gain);
    const double bg = 0.12;
    const double nucleus_level = bg + k * (0.85 - bg);
    const double ooplasm_level = bg + k * (0.62 - bg);

    RasterImage img = RasterImage::make(side, side, 1, bg);
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double d = std::hypot(x - cx, y - cy);
            if (d > r_out + 2.0) continue;
            const double w_out = inside_weight(d, r_out, edge_width);
            const double w_cell = inside_weight(d, r_cell, edge_width);
            const double w_nuc = inside_weight(d, r_nuc, edge_width);

            double cumulus;
            const double sp = speckle.at(x, y);
            switch (spec.grade) {
                case Grade::A:
                    // Dense granular investment: a continuous band carrying
                    // bright fine grains.
                    cumulus = bg + k * (0.38 + (sp > 0.0 ? granule_amp : 0.0) - bg);
                    break;
                case Grade::B:
                    // Continuous layer with a faint large-scale ripple.
                    cumulus = bg + k * (0.45 + ripple_amp * sp - bg);
                    break;
                case Grade::C:
                    // Thin layer, moderate granulation.
                    cumulus = bg + k * (0.40 + (sp > 0.0 ? granule_amp : 0.0) - bg);
                    break;
                case Grade::D:
                default:
                    // Patchy remnants: sparse clumps, background elsewhere.
                    cumulus = sp > 1.0 ? bg + k * (0.45 - bg) : bg;
                    break;
            }

            // The cortical zone smooths out toward the membrane and the
            // perinuclear zone toward the nucleus, so both boundaries keep a
            // uniform contrast around their circumference.
            const double cortical = std::clamp((r_cell - d) / 6.0, 0.0, 1.0) *
                                    std::clamp((d - r_nuc - 1.5) / 4.0, 0.0, 1.0);
            const double ooplasm =
                ooplasm_level + k * mottle_amp * cortical * mottle.at(x, y);
            double v = bg;
            v += (cumulus - bg) * (w_out - w_cell);
            v += (ooplasm - bg) * (w_cell - w_nuc);
            v += (nucleus_level - bg) * w_nuc;
            // Bright membrane rim at the ooplasm edge (zona pellucida): a
            // consistent boundary cue even where the mottle runs dark.
            const double rim = (d - (r_cell - 1.0)) / 1.2;
            v += k * 0.09 * std::exp(-0.5 * rim * rim);
            img.at(x, y) = v;
        }
    }

    if (spec.noise_sigma > 0.0) {
        for (double& v : img.data) v += spec.noise_sigma * rng.next_gaussian();
    }
    for (double& v : img.data) {
        v = std::clamp(v, 0.0, 1.0);
        v = std::round(v * 255.0) / 255.0; // match the 8-bit files bit-for-bit
    }

    Phantom out;
    out.image = std::move(img);
    out.grade = spec.grade;
    out.cell_truth = Circle{cx, cy, r_out};
    out.nucleus_truth = Circle{cx, cy, r_nuc};
    out.cell_mask = rasterize_circle(out.cell_truth, side, side);
    out.nucleus_mask = rasterize_circle(out.nucleus_truth, side, side);
    out.ooplasm_radius = r_cell;
    out.cumulus_thickness = thickness;
    return out;
}

std::vector<Phantom> generate_corpus(int count_per_grade, std::uint64_t master_seed,
                                     int side, double contrast, double noise_sigma) {
    if (count_per_grade < 1) fail(errc::invalid_params, "count per grade must be >= 1");
    std::vector<Phantom> out;
    out.reserve(static_cast<std::size_t>(count_per_grade) * kGradeCount);
    for (int g = 0; g < kGradeCount; ++g) {
        for (int i = 0; i < count_per_grade; ++i) {
            PhantomSpec spec;
            spec.grade = static_cast<Grade>(g);
            spec.side = side;
            spec.seed = mix_seed(master_seed, static_cast<std::uint64_t>(g),
                                 static_cast<std::uint64_t>(i));
            spec.contrast = contrast;
            spec.noise_sigma = noise_sigma;
            out.push_back(generate(spec));
        }
    }
    return out;
}

} // namespace coc::synth
