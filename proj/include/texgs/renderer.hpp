#pragma once

#include "texgs/camera.hpp"
#include "texgs/texture_atlas.hpp"

#include <limits>
#include <span>
#include <vector>

namespace texgs {

inline constexpr double kAlphaCutoff = 1.0 / 255.0;
inline constexpr double kTransmittanceStop = 1e-4;
inline constexpr double kMedianOpacity = 0.5;
inline constexpr double kInfiniteDepth = std::numeric_limits<double>::infinity();

struct RenderOptions {
    int threads = 1;
};

struct RenderOutput {
    Image color;        // 3 channels, unclamped
    Image alpha;        // 1 channel
    Image median_depth; // 1 channel, ray parameter t; +inf where opacity never passes 0.5
};

/// Primitive indices sorted front to back by camera-space depth of the mean.
/// Primitives whose mean is not beyond the near plane are dropped; ties keep index order.
std::vector<int> sort_primitives(const Scene& scene, const Camera& camera);

/// Radiance of primitive `index` at plane point x seen along dir: texture (or the SH
/// base color for untextured primitives) plus the view-dependent residual.
Rgb shade(const Scene& scene, int index, const Vec3& x, const Vec3& dir);

/// One compositing step along a ray. `transmittance` is the value before this hit.
struct RayHit {
    int primitive = -1;
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    double alpha = 0.0;
    double transmittance = 1.0;
};

/// Walks `candidates` in order and records every hit that contributes (alpha at or
/// above 1/255), stopping once transmittance drops below 1e-4. Returns the final
/// transmittance.
double trace_ray(const Scene& scene, std::span<const int> candidates, const Ray& ray,
                 std::vector<RayHit>& hits);

struct RayResult {
    Rgb color = Rgb::Zero();
    double alpha = 0.0;
    double median_depth = kInfiniteDepth;
};

RayResult composite_ray(const Scene& scene, std::span<const int> ordering, const Ray& ray,
                        const Rgb& background);

/// Per-view acceleration: screen tiles listing, in depth order, the primitives whose
/// alpha can reach the 1/255 cutoff inside the tile. Lookups are conservative, so
/// results equal compositing over the full ordering.
class ViewBinning {
public:
    ViewBinning(const Scene& scene, const Camera& camera);

    [[nodiscard]] std::span<const int> candidates(int x, int y) const {
        const auto& list = tiles_[static_cast<std::size_t>(y / kTile) * tiles_x_ + x / kTile];
        return list;
    }
    [[nodiscard]] const std::vector<int>& ordering() const { return ordering_; }

private:
    static constexpr int kTile = 16;
    int tiles_x_ = 0;
    int tiles_y_ = 0;
    std::vector<int> ordering_;
    std::vector<std::vector<int>> tiles_;
};

/// Renders every pixel's center ray. Output is bit-identical for identical inputs
/// regardless of the thread count.
RenderOutput render(const Scene& scene, const Camera& camera, const RenderOptions& options = {});

/// Clamps to [0, 1] for image output.
Image clamp_unit(const Image& image);

} // namespace texgs
