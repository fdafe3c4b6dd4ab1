#pragma once

#include "texgs/texture_atlas.hpp"

#include <filesystem>

namespace texgs {

// Native scene file, little-endian throughout:
//
//   char[4]  magic "GSTX"
//   u32      version (1)
//   u32      primitive count n
//   u32      SH degree L
//   f32      texel size
//   f32[3]   background rgb
//   u64      texel budget
//   n records:
//     f32[3] position, f32[4] rotation quaternion (w, x, y, z), f32[2] scale,
//     f32 opacity logit, f32[3] degree-0 SH coefficient,
//     f32[3 * ((L+1)^2 - 1)] SH residual (coefficient-major), u32 U, u32 V
//   u64      total texel count T_n (must equal the sum of U * V)
//   f32[3 * T_n] texels, primitive-major, row-major within a map
inline constexpr std::uint32_t kSceneFileVersion = 1;

class SceneFormatError : public IoError {
public:
    using IoError::IoError;
};

void save_scene(const Scene& scene, const std::filesystem::path& path);

/// Loads a native scene file. Throws IoError if the file cannot be opened and
/// SceneFormatError for a bad magic, version mismatch, truncation, non-unit
/// quaternion or texel count mismatch.
Scene load_scene(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_scene(const Scene& scene);
Scene decode_scene(const std::vector<std::uint8_t>& bytes);

/// Rounds every stored field to 32-bit float precision (the on-disk precision) and
/// rebuilds rotation matrices from the rounded quaternions, so that the scene
/// survives save/load bit-exactly.
void round_to_storage_precision(Scene& scene);

/// Imports a binary little-endian splat PLY (x y z, scale_0 scale_1, rot_0..3,
/// opacity, f_dc_0..2, f_rest_*). Scales are exponentiated, opacity stays a logit,
/// f_rest is re-ordered from channel-major to coefficient-major. The result is
/// untextured. A scale_2 column, if present, is ignored.
Scene import_splat_ply(const std::filesystem::path& path);

/// Writes the primitives in the same PLY layout import_splat_ply reads.
void export_splat_ply(const Scene& scene, const std::filesystem::path& path);

} // namespace texgs
