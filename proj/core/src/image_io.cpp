#include "coc/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "coc/error.hpp"

namespace coc {

namespace fs = std::filesystem;

namespace {

std::uint8_t quantize(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

fs::path temp_sibling(const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    return tmp;
}

RasterImage from_bytes(const std::vector<std::uint8_t>& bytes, int w, int h, int c) {
    RasterImage img = RasterImage::make(w, h, c);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        img.data[i] = bytes[i] / 255.0;
    return img;
}

RasterImage load_png_file(const fs::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str()))
        fail(errc::io_error, "cannot read PNG " + path.string() + ": " + image.message);

    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        fail(errc::io_error, "cannot decode PNG " + path.string() + ": " + msg);
    }
    return from_bytes(bytes, static_cast<int>(image.width), static_cast<int>(image.height),
                      color ? 3 : 1);
}

RasterImage load_pnm_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(errc::io_error, "cannot open " + path.string());
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6")
        fail(errc::io_error, "unsupported PNM magic '" + magic + "' in " + path.string());
    const int channels = magic == "P6" ? 3 : 1;

    // Header tokens may be separated by whitespace and '#' comments.
    auto next_int = [&in, &path]() {
        int v;
        while (true) {
            in >> std::ws;
            if (in.peek() == '#') {
                std::string line;
                std::getline(in, line);
                continue;
            }
            if (!(in >> v)) fail(errc::io_error, "truncated PNM header in " + path.string());
            return v;
        }
    };
    const int w = next_int();
    const int h = next_int();
    const int maxval = next_int();
    if (maxval != 255) fail(errc::io_error, "only maxval 255 PNM supported");
    in.get(); // single whitespace byte before the raster

    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        fail(errc::io_error, "truncated PNM raster in " + path.string());
    return from_bytes(bytes, w, h, channels);
}

} // namespace

RasterImage load_image(const fs::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) fail(errc::io_error, "cannot open " + path.string());
    char magic[2] = {0, 0};
    probe.read(magic, 2);
    probe.close();
    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6'))
        return load_pnm_file(path);
    return load_png_file(path);
}

void save_png(const fs::path& path, const RasterImage& img) {
    if (img.channels != 1 && img.channels != 3)
        fail(errc::invalid_params, "PNG save supports 1 or 3 channels");
    std::vector<std::uint8_t> bytes(img.data.size());
    for (std::size_t i = 0; i < img.data.size(); ++i) bytes[i] = quantize(img.data[i]);

    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    const fs::path tmp = temp_sibling(path);
    if (!png_image_write_to_file(&image, tmp.string().c_str(), 0, bytes.data(), 0, nullptr))
        fail(errc::io_error, "cannot write PNG " + path.string() + ": " + image.message);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(errc::io_error, "cannot move " + tmp.string() + " into place: " + ec.message());
}

void save_mask_png(const fs::path& path, const BitMask& mask) {
    RasterImage img = RasterImage::make(mask.width, mask.height, 1);
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        img.data[i] = mask.bits[i] ? 1.0 : 0.0;
    save_png(path, img);
}

BitMask load_mask_png(const fs::path& path) {
    RasterImage img = load_image(path);
    BitMask m = BitMask::make(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            m.set(x, y, img.at(x, y, 0) >= 0.5);
    return m;
}

void save_pnm(const fs::path& path, const RasterImage& img) {
    if (img.channels != 1 && img.channels != 3)
        fail(errc::invalid_params, "PNM save supports 1 or 3 channels");
    std::ostringstream out;
    out << (img.channels == 3 ? "P6" : "P5") << "\n"
        << img.width << " " << img.height << "\n255\n";
    for (double v : img.data) out.put(static_cast<char>(quantize(v)));
    atomic_write_file(path, out.str());
}

void atomic_write_file(const fs::path& path, const std::string& bytes) {
    const fs::path tmp = temp_sibling(path);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(errc::io_error, "cannot open " + tmp.string() + " for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(errc::io_error, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(errc::io_error, "cannot move " + tmp.string() + " into place: " + ec.message());
}

} // namespace coc
