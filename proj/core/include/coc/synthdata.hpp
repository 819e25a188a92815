#pragma once

#include <cstdint>
#include <vector>

#include "coc/grade.hpp"
#include "coc/raster.hpp"

namespace coc::synth {

/// Parameters of one synthetic cumulus-oocyte phantom. `contrast` scales the
/// intensity separation between the structures, `noise_sigma` is the std of
/// the additive Gaussian pixel noise.
struct PhantomSpec {
    Grade grade = Grade::A;
    int side = 256;
    std::uint64_t seed = 0;
    double contrast = 1.0;
    double noise_sigma = 0.035;

    void validate() const;
};

/// A generated phantom with its ground truth. `cell_truth` is the outer
/// boundary of the whole complex (ooplasm plus cumulus investment), which is
/// what the outer contour stage is expected to find; `nucleus_truth` the
/// inner disk. Masks are the rasterized truth circles.
struct Phantom {
    RasterImage image; // grayscale, quantized to the 8-bit grid
    BitMask cell_mask;
    BitMask nucleus_mask;
    Grade grade = Grade::A;
    Circle cell_truth;
    Circle nucleus_truth;
    double ooplasm_radius = 0.0;
    double cumulus_thickness = 0.0;
};

/// Deterministic phantom synthesis. Geometry: ooplasm disk radius
/// ~0.22 * side jittered +-10% by seed, nucleus at 0.45 of the ooplasm
/// radius, cumulus annulus thickness per grade (A 0.50, B 0.30, C 0.12,
/// D 0.03 of the ooplasm radius; D is patchy), center jittered +-5% of the
/// side. Grade D additionally gets a heterogeneous (high-variance) ooplasm.
Phantom generate(const PhantomSpec& spec);

/// count_per_grade phantoms per grade (A block first, then B, C, D) with
/// per-item seeds derived from master_seed; class-balanced by construction.
std::vector<Phantom> generate_corpus(int count_per_grade, std::uint64_t master_seed,
                                     int side = 256, double contrast = 1.0,
                                     double noise_sigma = 0.02);

} // namespace coc::synth
