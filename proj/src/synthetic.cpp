#include "texgs/synthetic.hpp"

#include "texgs/renderer.hpp"
#include "texgs/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace texgs {

SyntheticKind parse_synthetic_kind(const std::string& name) {
    if (name == "plane") {
        return SyntheticKind::Plane;
    }
    if (name == "grid") {
        return SyntheticKind::Grid;
    }
    if (name == "random") {
        return SyntheticKind::Random;
    }
    throw ValidationError("unknown synthetic scene kind '" + name + "' (plane, grid, random)");
}

Image checkerboard_glyph(int resolution) {
    if (resolution < 8) {
        throw ValidationError("checkerboard resolution must be at least 8");
    }
    const Rgb light(0.72, 0.66, 0.55);
    const Rgb dark(0.30, 0.36, 0.48);
    const Rgb ink(0.70, 0.28, 0.26);

    Image img(resolution, resolution, 3);
    const double cell = resolution / 8.0;
    const double c = 0.5 * resolution;
    for (int y = 0; y < resolution; ++y) {
        for (int x = 0; x < resolution; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            const int parity = (static_cast<int>(px / cell) + static_cast<int>(py / cell)) % 2;
            Rgb color = parity == 0 ? light : dark;

            // Ring around the center plus an off-center vertical bar; breaks the
            // checkerboard's symmetry so misregistration is visible.
            const double r = std::hypot(px - c, py - c) / resolution;
            const bool ring = r > 0.20 && r < 0.27;
            const bool bar = std::abs(px - 0.62 * resolution) < 0.035 * resolution && py > 0.3 * resolution &&
                             py < 0.7 * resolution;
            if (ring || bar) {
                color = ink;
            }
            img.set_rgb(x, y, color);
        }
    }
    return img;
}

namespace {

class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : rng_(seed) {}
    double operator()() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }

private:
    std::mt19937_64 rng_;
};

// Bilinear lookup of the texture image stretched over [-half, half]^2 (row 0 at y = -half).
Rgb sample_texture(const Image& tex, double half, double x, double y) {
    const double px = std::clamp((x + half) / (2.0 * half) * tex.width - 0.5, 0.0, tex.width - 1.0);
    const double py = std::clamp((y + half) / (2.0 * half) * tex.height - 0.5, 0.0, tex.height - 1.0);
    const int x0 = static_cast<int>(std::floor(px));
    const int y0 = static_cast<int>(std::floor(py));
    const int x1 = std::min(x0 + 1, tex.width - 1);
    const int y1 = std::min(y0 + 1, tex.height - 1);
    const double fx = px - x0;
    const double fy = py - y0;
    return (1 - fx) * (1 - fy) * tex.rgb(x0, y0) + fx * (1 - fy) * tex.rgb(x1, y0) +
           (1 - fx) * fy * tex.rgb(x0, y1) + fx * fy * tex.rgb(x1, y1);
}

TexturedGaussian make_primitive(const Vec3& position, const Quat& q, const Vec2& scale, double opacity,
                                int sh_degree) {
    TexturedGaussian g;
    g.position = position;
    g.set_orientation(q);
    g.scale = scale;
    g.opacity_logit = std::log(opacity / (1.0 - opacity));
    g.sh_residual.assign(sh_residual_length(sh_degree), 0.0);
    return g;
}

int grid_side(int primitives) {
    const int k = static_cast<int>(std::lround(std::sqrt(static_cast<double>(primitives))));
    if (k * k != primitives) {
        throw ValidationError("plane and grid scenes need a square primitive count, got " +
                              std::to_string(primitives));
    }
    return k;
}

void build_geometry(const SyntheticParams& p, Uniform& uniform, Scene& scene) {
    const double half = p.half_extent;
    auto& out = scene.gaussians;
    if (p.kind == SyntheticKind::Random) {
        constexpr double kMaxTilt = 30.0 * std::numbers::pi / 180.0;
        for (int i = 0; i < p.primitives; ++i) {
            const Vec3 pos(uniform(-0.8, 0.8) * half, uniform(-0.8, 0.8) * half, uniform(-0.15, 0.15) * half);
            const double axis_angle = uniform(0.0, 2.0 * std::numbers::pi);
            const Quat tilt(Eigen::AngleAxisd(uniform(0.0, kMaxTilt),
                                              Vec3(std::cos(axis_angle), std::sin(axis_angle), 0.0)));
            const Quat spin(Eigen::AngleAxisd(uniform(0.0, 2.0 * std::numbers::pi), Vec3::UnitZ()));
            const Vec2 scale(uniform(0.08, 0.25) * half, uniform(0.08, 0.25) * half);
            auto g = make_primitive(pos, tilt * spin, scale, uniform(0.6, 0.99), p.sh_degree);
            for (auto& r : g.sh_residual) {
                r = uniform(-0.05, 0.05);
            }
            out.push_back(std::move(g));
        }
        return;
    }

    if (p.primitives == 1) {
        out.push_back(make_primitive(Vec3::Zero(), Quat::Identity(), Vec2::Constant(half / 3.0), p.opacity,
                                     p.sh_degree));
        return;
    }
    const int k = grid_side(p.primitives);
    const double spacing = 2.0 * half / k;
    const double jitter = p.kind == SyntheticKind::Grid ? 0.1 * spacing : 0.0;
    for (int j = 0; j < k; ++j) {
        for (int i = 0; i < k; ++i) {
            Vec3 pos(-half + spacing * (i + 0.5), -half + spacing * (j + 0.5), 0.0);
            Quat q = Quat::Identity();
            if (jitter > 0.0) {
                pos.x() += uniform(-jitter, jitter);
                pos.y() += uniform(-jitter, jitter);
                q = Quat(Eigen::AngleAxisd(uniform(-0.3, 0.3), Vec3::UnitZ()));
            }
            out.push_back(make_primitive(pos, q, Vec2::Constant(0.8 * spacing), p.opacity, p.sh_degree));
        }
    }
}

std::vector<Camera> ring_cameras(const SyntheticParams& p, int count, double elevation, double phase) {
    std::vector<Camera> cams;
    for (int i = 0; i < count; ++i) {
        const double azimuth = 2.0 * std::numbers::pi * (i + phase) / count;
        const Vec3 eye = p.camera_distance * Vec3(std::sin(elevation) * std::cos(azimuth),
                                                  std::sin(elevation) * std::sin(azimuth), std::cos(elevation));
        cams.push_back(
            Camera::look_at(eye, Vec3::Zero(), Vec3::UnitY(), p.fov_x, p.width, p.height, 0.1, 10.0));
    }
    return cams;
}

} // namespace

SyntheticScene make_synthetic(const SyntheticParams& params, std::uint64_t seed) {
    if (params.primitives < 1 || params.train_views < 1 || params.test_views < 0 || params.width < 1 ||
        params.height < 1 || !(params.half_extent > 0.0) || params.sh_degree < 0 ||
        params.sh_degree > kMaxShDegree || !(params.opacity > 0.0 && params.opacity < 1.0)) {
        throw ValidationError("invalid synthetic scene parameters");
    }
    const Image texture = params.texture.empty() ? checkerboard_glyph(params.texture_resolution) : params.texture;
    if (texture.channels < 3) {
        throw ValidationError("synthetic texture needs RGB channels");
    }
    Uniform uniform(seed);

    SyntheticScene out;
    out.fov_x = params.fov_x;
    Scene& gt = out.ground_truth;
    gt.background = params.background;
    gt.sh_degree = params.sh_degree;
    build_geometry(params, uniform, gt);
    // Round before sizing the maps so the stored dims agree with a fresh allocation
    // from the stored scales and texel size.
    round_to_storage_precision(gt);
    allocate_with_texel_size(gt, to_float_precision(2.0 * params.half_extent /
                                                    std::max(texture.width, texture.height)));
    for (const auto& g : gt.gaussians) {
        for (int v = 0; v < g.tex_height; ++v) {
            for (int u = 0; u < g.tex_width; ++u) {
                const Vec3 x = uv_to_world(g, u, v, gt.atlas.texel_size);
                gt.atlas.set_texel(g.tex_offset + static_cast<std::int64_t>(v) * g.tex_width + u,
                                   sample_texture(texture, params.half_extent, x.x(), x.y()));
            }
        }
    }
    round_to_storage_precision(gt);

    // Initial model: the same geometry with the texture collapsed into the degree-0 SH.
    Scene& init = out.initial;
    init.background = gt.background;
    init.sh_degree = gt.sh_degree;
    for (const auto& g_gt : gt.gaussians) {
        TexturedGaussian g = g_gt;
        Rgb sum = Rgb::Zero();
        double weight = 0.0;
        for (int v = 0; v < g_gt.tex_height; ++v) {
            for (int u = 0; u < g_gt.tex_width; ++u) {
                const Vec3 x = uv_to_world(g_gt, u, v, gt.atlas.texel_size);
                const double w = std::exp(-0.5 * gaussian_exponent(g_gt, x));
                sum += w * gt.atlas.texel(g_gt.tex_offset + static_cast<std::int64_t>(v) * g_gt.tex_width + u);
                weight += w;
            }
        }
        g.sh_dc = (sum / weight - Rgb::Constant(0.5)) / kShC0;
        std::fill(g.sh_residual.begin(), g.sh_residual.end(), 0.0);
        g.tex_width = 0;
        g.tex_height = 0;
        g.tex_offset = 0;
        init.gaussians.push_back(std::move(g));
    }
    round_to_storage_precision(init);

    const RenderOptions opts{params.threads};
    for (const auto& cam : ring_cameras(params, params.train_views, params.train_elevation, 0.0)) {
        out.dataset.train.push_back({cam, render(gt, cam, opts).color});
    }
    for (const auto& cam : ring_cameras(params, params.test_views, params.test_elevation, 0.5)) {
        out.dataset.test.push_back({cam, render(gt, cam, opts).color});
    }
    return out;
}

} // namespace texgs
