#pragma once

#include <filesystem>
#include <string>

#include "coc/raster.hpp"

namespace coc {

/// Loads an 8-bit PNG (gray or RGB) or binary PGM/PPM; values scaled to
/// [0,1] by dividing by 255. Alpha channels are stripped, 16-bit inputs are
/// reduced to 8 bits. Throws io_error on unreadable or unsupported files.
RasterImage load_image(const std::filesystem::path& path);

/// Saves as 8-bit PNG, gray for 1 channel and RGB for 3. Values are clamped
/// to [0,1] and rounded to the 255 grid. Writes atomically (temp + rename).
void save_png(const std::filesystem::path& path, const RasterImage& img);

/// Mask as 8-bit gray PNG with pixels 0 or 255.
void save_mask_png(const std::filesystem::path& path, const BitMask& mask);

/// Loads a mask image; a pixel is set iff its (first-channel) value >= 0.5.
BitMask load_mask_png(const std::filesystem::path& path);

/// Binary PGM (1 channel) or PPM (3 channels), maxval 255, atomic write.
void save_pnm(const std::filesystem::path& path, const RasterImage& img);

/// Writes a whole file atomically: temp file in the same directory + rename.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

} // namespace coc
