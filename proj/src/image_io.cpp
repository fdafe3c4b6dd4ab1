#include "texgs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace texgs {

namespace {

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* file = nullptr;
    ~PngReader() {
        png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (file) {
            std::fclose(file);
        }
    }
};

} // namespace

// Raw sample values scaled by the bit depth: no gamma or color-space conversion,
// so 16-bit depth maps read back exactly.
Image read_png(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("image not found: " + path.string());
    }
    PngReader r;
    r.file = std::fopen(path.c_str(), "rb");
    if (!r.file) {
        throw IoError("cannot read PNG " + path.string());
    }
    png_byte signature[8];
    if (std::fread(signature, 1, 8, r.file) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
        throw IoError("cannot read PNG " + path.string() + ": not a PNG file");
    }
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = r.png ? png_create_info_struct(r.png) : nullptr;
    if (!r.info) {
        throw IoError("cannot read PNG " + path.string() + ": out of memory");
    }
    // libpng reports errors by longjmp; only trivially destructible locals live
    // between here and the reads.
    if (setjmp(png_jmpbuf(r.png))) {
        throw IoError("cannot decode PNG " + path.string());
    }
    png_init_io(r.png, r.file);
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);
    png_set_expand(r.png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_gray_to_rgb(r.png);
    }
    if (!(color & PNG_COLOR_MASK_ALPHA) && !png_get_valid(r.png, r.info, PNG_INFO_tRNS)) {
        png_set_add_alpha(r.png, depth == 16 ? 0xffff : 0xff, PNG_FILLER_AFTER);
    }
    if (depth == 16) {
        png_set_swap(r.png);
    }
    png_read_update_info(r.png, r.info);

    const auto width = png_get_image_width(r.png, r.info);
    const auto height = png_get_image_height(r.png, r.info);
    const std::size_t row_bytes = png_get_rowbytes(r.png, r.info);
    std::vector<png_byte> buffer(row_bytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) {
        rows[y] = buffer.data() + y * row_bytes;
    }
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);

    Image out(static_cast<int>(width), static_cast<int>(height), 4);
    if (depth == 16) {
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            std::uint16_t v;
            std::memcpy(&v, buffer.data() + 2 * i, 2);
            out.data[i] = v / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            out.data[i] = buffer[i] / 255.0;
        }
    }
    return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    switch (image.channels) {
    case 1: img.format = PNG_FORMAT_GRAY; break;
    case 3: img.format = PNG_FORMAT_RGB; break;
    case 4: img.format = PNG_FORMAT_RGBA; break;
    default: throw ValidationError("write_png supports 1, 3 or 4 channels");
    }
    std::vector<png_byte> buffer(image.data.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        buffer[i] = static_cast<png_byte>(std::lround(std::clamp(image.data[i], 0.0, 1.0) * 255.0));
    }
    if (png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
        throw IoError("cannot write PNG " + path.string() + ": " + img.message);
    }
}

void write_depth_png16(const Image& depth, double near, double far, const std::filesystem::path& path) {
    if (depth.channels != 1) {
        throw ValidationError("depth map must have one channel");
    }
    if (!(near < far)) {
        throw ValidationError("depth range needs near < far");
    }
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(depth.width);
    img.height = static_cast<png_uint_32>(depth.height);
    img.format = PNG_FORMAT_LINEAR_Y;
    std::vector<png_uint_16> buffer(depth.data.size());
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const double d = depth.data[i];
        const double unit = std::isfinite(d) ? std::clamp((d - near) / (far - near), 0.0, 1.0) : 1.0;
        buffer[i] = static_cast<png_uint_16>(std::lround(unit * 65535.0));
    }
    if (png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
        throw IoError("cannot write PNG " + path.string() + ": " + img.message);
    }
}

Image composite_over(const Image& rgba, const Rgb& background) {
    if (rgba.channels == 3) {
        return rgba;
    }
    if (rgba.channels != 4) {
        throw ValidationError("composite_over expects an RGBA image");
    }
    Image out(rgba.width, rgba.height, 3);
    for (std::size_t p = 0; p < rgba.pixel_count(); ++p) {
        const double a = rgba.data[p * 4 + 3];
        for (int c = 0; c < 3; ++c) {
            out.data[p * 3 + c] = a * rgba.data[p * 4 + c] + (1.0 - a) * background[c];
        }
    }
    return out;
}

} // namespace texgs
