#pragma once

#include "texgs/renderer.hpp"

#include <functional>

namespace texgs {

/// An RGBA image painted from a known camera. Alpha is coverage in [0, 1].
struct EditImage {
    Image rgba;
    Camera camera;
};

inline constexpr double kPaintDepthTolerance = 1e-2;

/// Casts an edited image onto the texels it covers.
///
/// Each pixel ray deposits its color onto the four bilinear-footprint texels of
/// every primitive it hits whose hit depth lies within `depth_tolerance` of the
/// pixel's median depth, with normalized depth (t - near) / (far - near). Deposits
/// are weighted by bilinear weight times the ray's transmittance at the hit. Per
/// texel, with w0 = sum a*w and w1 = sum (1-a)*w, the new value is
/// (sum c*a*w + w1 * old) / (w0 + w1). Texels no ray reaches keep their value.
void paint(Scene& scene, const EditImage& edit, double depth_tolerance = kPaintDepthTolerance,
           int threads = 1);

using ProceduralTexture = std::function<Rgb(const Vec3&)>;

/// Sets every texel to f(world-space texel center). Optionally clears SH residuals.
void retexture(Scene& scene, const ProceduralTexture& f, bool zero_sh = false);

/// Red/blue rings around integer lattice points.
Rgb builtin_circles(const Vec3& p);

/// Axis-aligned sinusoidal stripes.
Rgb builtin_stripes(const Vec3& p);

} // namespace texgs
