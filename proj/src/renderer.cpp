#include "texgs/renderer.hpp"

#include "texgs/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace texgs {

std::vector<int> sort_primitives(const Scene& scene, const Camera& camera) {
    std::vector<std::pair<double, int>> keyed;
    keyed.reserve(scene.gaussians.size());
    for (int i = 0; i < static_cast<int>(scene.gaussians.size()); ++i) {
        const double depth = camera.to_camera(scene.gaussians[i].position).z();
        if (depth > camera.near) {
            keyed.emplace_back(depth, i);
        }
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> order;
    order.reserve(keyed.size());
    for (const auto& [depth, i] : keyed) {
        order.push_back(i);
    }
    return order;
}

Rgb shade(const Scene& scene, int index, const Vec3& x, const Vec3& dir) {
    const auto& g = scene.gaussians[index];
    const Rgb base = g.textured() ? sample_bilinear(scene.atlas, g, world_to_uv(g, x, scene.atlas.texel_size))
                                  : sh0_base_color(g);
    return base + eval_sh(g.sh_residual, dir);
}

double trace_ray(const Scene& scene, std::span<const int> candidates, const Ray& ray,
                 std::vector<RayHit>& hits) {
    hits.clear();
    double transmittance = 1.0;
    for (const int index : candidates) {
        const auto hit = intersect(ray, scene.gaussians[index]);
        if (!hit || hit->alpha < kAlphaCutoff) {
            continue;
        }
        hits.push_back({index, hit->t, hit->point, hit->alpha, transmittance});
        transmittance *= 1.0 - hit->alpha;
        if (transmittance < kTransmittanceStop) {
            break;
        }
    }
    return transmittance;
}

namespace {

RayResult composite_hits(const Scene& scene, const std::vector<RayHit>& hits, double final_transmittance,
                         const Ray& ray, const Rgb& background) {
    RayResult out;
    for (const auto& hit : hits) {
        const double weight = hit.transmittance * hit.alpha;
        out.color += weight * shade(scene, hit.primitive, hit.point, ray.direction);
        const double opacity_after = 1.0 - hit.transmittance * (1.0 - hit.alpha);
        if (out.median_depth == kInfiniteDepth && opacity_after > kMedianOpacity) {
            out.median_depth = hit.t;
        }
    }
    out.color += final_transmittance * background;
    out.alpha = 1.0 - final_transmittance;
    return out;
}

} // namespace

RayResult composite_ray(const Scene& scene, std::span<const int> ordering, const Ray& ray,
                        const Rgb& background) {
    std::vector<RayHit> hits;
    const double transmittance = trace_ray(scene, ordering, ray, hits);
    return composite_hits(scene, hits, transmittance, ray, background);
}

ViewBinning::ViewBinning(const Scene& scene, const Camera& camera)
    : tiles_x_((camera.width + kTile - 1) / kTile),
      tiles_y_((camera.height + kTile - 1) / kTile),
      ordering_(sort_primitives(scene, camera)),
      tiles_(static_cast<std::size_t>(tiles_x_) * tiles_y_) {
    for (const int index : ordering_) {
        const auto& g = scene.gaussians[index];
        const double peak = 255.0 * g.opacity();
        if (!(peak >= 1.0)) {
            continue; // alpha can never reach the cutoff
        }
        // alpha >= 1/255 requires q <= 2 ln(255 o); bound that ellipse by a rectangle.
        const double reach = std::sqrt(2.0 * std::log(peak)) * 1.001 + 1e-9;
        const Vec3 du = reach * g.scale.x() * g.axis_u();
        const Vec3 dv = reach * g.scale.y() * g.axis_v();

        int x0 = 0;
        int y0 = 0;
        int x1 = tiles_x_ - 1;
        int y1 = tiles_y_ - 1;
        bool in_front = true;
        double min_x = kInfiniteDepth;
        double min_y = kInfiniteDepth;
        double max_x = -kInfiniteDepth;
        double max_y = -kInfiniteDepth;
        for (const double su : {-1.0, 1.0}) {
            for (const double sv : {-1.0, 1.0}) {
                const Vec3 c = camera.to_camera(g.position + su * du + sv * dv);
                if (!(c.z() > 1e-6)) {
                    in_front = false;
                    break;
                }
                const double px = camera.fx * c.x() / c.z() + camera.cx - 0.5;
                const double py = camera.fy * c.y() / c.z() + camera.cy - 0.5;
                min_x = std::min(min_x, px);
                max_x = std::max(max_x, px);
                min_y = std::min(min_y, py);
                max_y = std::max(max_y, py);
            }
            if (!in_front) {
                break;
            }
        }
        if (in_front) {
            // Projected corners bound the projected quad; pad by a pixel.
            const double lo_x = std::floor(min_x) - 1.0;
            const double hi_x = std::ceil(max_x) + 1.0;
            const double lo_y = std::floor(min_y) - 1.0;
            const double hi_y = std::ceil(max_y) + 1.0;
            if (hi_x < 0.0 || hi_y < 0.0 || lo_x >= camera.width || lo_y >= camera.height) {
                continue;
            }
            x0 = static_cast<int>(std::max(0.0, lo_x)) / kTile;
            y0 = static_cast<int>(std::max(0.0, lo_y)) / kTile;
            x1 = static_cast<int>(std::min<double>(camera.width - 1, hi_x)) / kTile;
            y1 = static_cast<int>(std::min<double>(camera.height - 1, hi_y)) / kTile;
        }
        for (int ty = y0; ty <= y1; ++ty) {
            for (int tx = x0; tx <= x1; ++tx) {
                tiles_[static_cast<std::size_t>(ty) * tiles_x_ + tx].push_back(index);
            }
        }
    }
}

RenderOutput render(const Scene& scene, const Camera& camera, const RenderOptions& options) {
    validate(camera);
    RenderOutput out;
    out.color = Image(camera.width, camera.height, 3);
    out.alpha = Image(camera.width, camera.height, 1);
    out.median_depth = Image(camera.width, camera.height, 1, kInfiniteDepth);
    const ViewBinning binning(scene, camera);

    parallel_bands(camera.height, options.threads, [&](int row_begin, int row_end, int) {
        std::vector<RayHit> hits;
        for (int y = row_begin; y < row_end; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                const Ray ray = camera.pixel_ray(x, y);
                const double transmittance = trace_ray(scene, binning.candidates(x, y), ray, hits);
                const RayResult r = composite_hits(scene, hits, transmittance, ray, scene.background);
                out.color.set_rgb(x, y, r.color);
                out.alpha.at(x, y, 0) = r.alpha;
                out.median_depth.at(x, y, 0) = r.median_depth;
            }
        }
    });
    return out;
}

Image clamp_unit(const Image& image) {
    Image out = image;
    for (auto& v : out.data) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

} // namespace texgs
