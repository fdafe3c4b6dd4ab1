#pragma once

#include "texgs/dataset.hpp"

#include <cstdint>
#include <numbers>
#include <string>

namespace texgs {

enum class SyntheticKind { Plane, Grid, Random };

SyntheticKind parse_synthetic_kind(const std::string& name);

struct SyntheticParams {
    SyntheticKind kind = SyntheticKind::Plane;
    int primitives = 1;
    int train_views = 8;
    int test_views = 2;
    int width = 128;
    int height = 128;
    double fov_x = 40.0 * std::numbers::pi / 180.0;
    double camera_distance = 3.4;
    // Tilt of the camera ring away from the plane normal (training / held-out views).
    double train_elevation = 25.0 * std::numbers::pi / 180.0;
    double test_elevation = 18.0 * std::numbers::pi / 180.0;
    double half_extent = 1.0;
    // Ground-truth texture spread over [-half_extent, half_extent]^2 in world xy.
    // Empty means checkerboard_glyph(texture_resolution).
    Image texture;
    int texture_resolution = 256;
    int sh_degree = 1;
    double opacity = 0.99;
    Rgb background = Rgb::Ones();
    int threads = 1;
};

struct SyntheticScene {
    Scene ground_truth;
    // Same geometry, untextured, with the degree-0 SH set to each primitive's
    // alpha-weighted mean ground-truth color: a stand-in for an imported model.
    Scene initial;
    Dataset dataset;
    double fov_x = 0.0;
};

/// 8x8 two-tone checkerboard with a ring-and-bar glyph, RGB in [0.15, 0.85].
Image checkerboard_glyph(int resolution);

/// Builds a ground-truth textured scene and renders it from a ring of cameras.
/// Deterministic in `seed`. All scene values are float-representable, so the scene
/// round-trips through the native format and re-renders bit-exactly.
SyntheticScene make_synthetic(const SyntheticParams& params, std::uint64_t seed);

} // namespace texgs
