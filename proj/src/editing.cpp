#include "texgs/editing.hpp"

#include "texgs/parallel.hpp"

#include <cmath>

namespace texgs {

namespace {

// Per-texel sums: sum(c*a*w) (3), w0, w1.
struct PaintAccumulator {
    std::vector<double> values;

    explicit PaintAccumulator(std::int64_t texels) : values(static_cast<std::size_t>(texels) * 5, 0.0) {}

    void deposit(std::int64_t texel, const Rgb& color, double coverage, double weight) {
        double* p = &values[static_cast<std::size_t>(texel) * 5];
        p[0] += color.x() * coverage * weight;
        p[1] += color.y() * coverage * weight;
        p[2] += color.z() * coverage * weight;
        p[3] += coverage * weight;
        p[4] += (1.0 - coverage) * weight;
    }

};

// Deposits of one band, replayed in band order so the sums match a serial pass.
struct DepositLog {
    struct Entry {
        std::int64_t texel;
        Rgb color;
        double coverage;
        double weight;
    };
    std::vector<Entry> entries;

    void deposit(std::int64_t texel, const Rgb& color, double coverage, double weight) {
        entries.push_back({texel, color, coverage, weight});
    }
    void replay(PaintAccumulator& acc) const {
        for (const auto& e : entries) {
            acc.deposit(e.texel, e.color, e.coverage, e.weight);
        }
    }
};

} // namespace

void paint(Scene& scene, const EditImage& edit, double depth_tolerance, int threads) {
    const Camera& camera = edit.camera;
    validate(camera);
    if (edit.rgba.width != camera.width || edit.rgba.height != camera.height || edit.rgba.channels != 4) {
        throw ValidationError("edit image must be RGBA with the camera's dimensions");
    }
    check_consistency(scene);
    if (!scene.textured()) {
        throw ValidationError("paint needs a textured scene");
    }
    if (!(depth_tolerance >= 0.0)) {
        throw ValidationError("depth tolerance must be non-negative");
    }

    const RenderOutput reference = render(scene, camera, {threads});
    const double depth_range = camera.far - camera.near;
    auto normalized = [&](double t) { return (t - camera.near) / depth_range; };

    const ViewBinning binning(scene, camera);
    const std::int64_t texel_count = scene.atlas.texel_count();
    auto visit_rows = [&](int row_begin, int row_end, auto& sink) {
        std::vector<RayHit> hits;
        for (int y = row_begin; y < row_end; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                const double median = reference.median_depth.at(x, y, 0);
                if (!std::isfinite(median)) {
                    continue;
                }
                const double coverage = std::clamp(edit.rgba.at(x, y, 3), 0.0, 1.0);
                const Rgb color(edit.rgba.at(x, y, 0), edit.rgba.at(x, y, 1), edit.rgba.at(x, y, 2));
                const Ray ray = camera.pixel_ray(x, y);
                trace_ray(scene, binning.candidates(x, y), ray, hits);
                for (const auto& hit : hits) {
                    if (std::abs(normalized(hit.t) - normalized(median)) > depth_tolerance) {
                        continue;
                    }
                    const auto& g = scene.gaussians[hit.primitive];
                    const auto fp = bilinear_footprint(g, world_to_uv(g, hit.point, scene.atlas.texel_size));
                    for (int k = 0; k < 4; ++k) {
                        const double weight = fp.weight[k] * hit.transmittance;
                        if (weight > 0.0) {
                            sink.deposit(fp.index[k], color, coverage, weight);
                        }
                    }
                }
            }
        }
    };

    PaintAccumulator total(texel_count);
    const int bands = band_count(camera.height, threads);
    if (bands == 1) {
        visit_rows(0, camera.height, total);
    } else {
        std::vector<DepositLog> logs(static_cast<std::size_t>(bands));
        parallel_bands(camera.height, threads, [&](int row_begin, int row_end, int band) {
            visit_rows(row_begin, row_end, logs[static_cast<std::size_t>(band)]);
        });
        for (const auto& log : logs) {
            log.replay(total);
        }
    }
    for (std::int64_t texel = 0; texel < texel_count; ++texel) {
        const double* p = &total.values[static_cast<std::size_t>(texel) * 5];
        const double w0 = p[3];
        const double w1 = p[4];
        if (!(w0 + w1 > 0.0)) {
            continue;
        }
        const Rgb painted(p[0], p[1], p[2]);
        scene.atlas.set_texel(texel, (painted + w1 * scene.atlas.texel(texel)) / (w0 + w1));
    }
}

void retexture(Scene& scene, const ProceduralTexture& f, bool zero_sh) {
    check_consistency(scene);
    if (!scene.textured()) {
        throw ValidationError("retexture needs an allocated atlas");
    }
    const double rho = scene.atlas.texel_size;
    for (auto& g : scene.gaussians) {
        for (int v = 0; v < g.tex_height; ++v) {
            for (int u = 0; u < g.tex_width; ++u) {
                scene.atlas.set_texel(g.tex_offset + static_cast<std::int64_t>(v) * g.tex_width + u,
                                      f(uv_to_world(g, u, v, rho)));
            }
        }
        if (zero_sh) {
            std::fill(g.sh_residual.begin(), g.sh_residual.end(), 0.0);
        }
    }
}

Rgb builtin_circles(const Vec3& p) {
    const Vec3 lattice(std::round(p.x()), std::round(p.y()), std::round(p.z()));
    const double s = std::sin((p - lattice).norm());
    return {0.5 * (s + 1.0), 0.0, 0.5 * (1.0 - s)};
}

Rgb builtin_stripes(const Vec3& p) {
    return {0.5 * (std::sin(p.x()) + 1.0), 0.5 * (std::sin(p.y()) + 1.0), 0.5 * (std::sin(p.z()) + 1.0)};
}

} // namespace texgs
