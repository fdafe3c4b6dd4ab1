#pragma once

#include "texgs/common.hpp"

#include <filesystem>

namespace texgs {

/// Reads an 8- or 16-bit PNG as RGBA in [0, 1].
Image read_png(const std::filesystem::path& path);

/// Writes a 1-, 3- or 4-channel image as an 8-bit PNG (values clamped to [0, 1]).
void write_png(const Image& image, const std::filesystem::path& path);

/// Writes a single-channel depth map as a 16-bit grayscale PNG, mapping near to 0 and
/// far (and anything beyond, including +inf) to 65535.
void write_depth_png16(const Image& depth, double near, double far, const std::filesystem::path& path);

/// Drops the alpha channel by compositing over `background`.
Image composite_over(const Image& rgba, const Rgb& background);

} // namespace texgs
