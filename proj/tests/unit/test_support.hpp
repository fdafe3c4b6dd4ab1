#pragma once

#include "texgs/optimizer.hpp"
#include "texgs/renderer.hpp"
#include "texgs/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

namespace texgs::test {

// Hand-rolled generator for property tests.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1)); }
    double normal() {
        const double u1 = std::max(uniform(), 1e-300);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * uniform());
    }
    Vec3 unit_vector() {
        Vec3 v(normal(), normal(), normal());
        return v.normalized();
    }
    Quat rotation() {
        Quat q(normal(), normal(), normal(), normal());
        return q.normalized();
    }

private:
    std::mt19937_64 engine_;
};

inline std::filesystem::path temp_dir(const std::string& name) {
    const char* base = std::getenv("TEXGS_TEST_TMP");
    std::filesystem::path dir = base ? std::filesystem::path(base) : std::filesystem::temp_directory_path() / "texgs";
    dir /= name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline TexturedGaussian random_primitive(Rng& rng, int sh_degree, double spread = 0.6) {
    TexturedGaussian g;
    g.position = Vec3(rng.uniform(-spread, spread), rng.uniform(-spread, spread), rng.uniform(-0.4, 0.4));
    // Keep normals facing the +z/-z cameras used in tests so every primitive is visible.
    const Quat tilt(Eigen::AngleAxisd(rng.uniform(0.0, 0.6), Vec3(rng.normal(), rng.normal(), 0.0).normalized()));
    const Quat spin(Eigen::AngleAxisd(rng.uniform(0.0, 2.0 * std::numbers::pi), Vec3::UnitZ()));
    g.set_orientation(tilt * spin);
    g.scale = Vec2(rng.uniform(0.08, 0.3), rng.uniform(0.08, 0.3));
    g.opacity_logit = rng.uniform(-1.0, 3.0);
    g.sh_dc = Rgb(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    g.sh_residual.resize(sh_residual_length(sh_degree));
    for (auto& c : g.sh_residual) {
        c = rng.uniform(-0.2, 0.2);
    }
    return g;
}

/// Random textured scene: `n` primitives, budget texels filled with random colors.
inline Scene random_scene(Rng& rng, int n, std::int64_t budget, int sh_degree = 1) {
    Scene scene;
    scene.sh_degree = sh_degree;
    scene.background = Rgb(rng.uniform(), rng.uniform(), rng.uniform());
    for (int i = 0; i < n; ++i) {
        scene.gaussians.push_back(random_primitive(rng, sh_degree));
    }
    if (budget >= n) {
        allocate_textures(scene, budget);
        for (auto& v : scene.atlas.texels) {
            v = rng.uniform(0.0, 1.0);
        }
    }
    return scene;
}

inline Camera front_camera(int width, int height, double distance = 3.0, double fov_deg = 45.0) {
    return Camera::look_at(Vec3(0.2, -0.1, distance), Vec3::Zero(), Vec3::UnitY(), fov_deg * std::numbers::pi / 180.0,
                           width, height, 0.1, 10.0);
}

/// Reference compositor: the same global front-to-back order of means as the
/// renderer (recomputed here with a plain comparison sort), but every primitive is
/// visited, with no alpha cutoff and no early termination.
inline std::vector<int> reference_order(const Scene& scene, const Camera& camera) {
    std::vector<std::pair<double, int>> keyed;
    const Mat3 r = camera.rotation();
    for (int i = 0; i < static_cast<int>(scene.gaussians.size()); ++i) {
        const double z = r.col(2).dot(scene.gaussians[static_cast<std::size_t>(i)].position - camera.center());
        if (z > camera.near) {
            keyed.emplace_back(z, i);
        }
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<int> order;
    for (const auto& [z, i] : keyed) {
        order.push_back(i);
    }
    return order;
}

/// What the cutoffs of the production compositor discard along one ray: the alpha
/// mass below 1/255 and the largest color magnitude met.
struct CutoffMass {
    double skipped_alpha = 0.0;
    double max_color = 0.0;
};

inline Rgb brute_force_pixel(const Scene& scene, const std::vector<int>& order, const Ray& ray,
                             CutoffMass* mass = nullptr) {
    Rgb color = Rgb::Zero();
    double transmittance = 1.0;
    for (const int i : order) {
        const auto& g = scene.gaussians[static_cast<std::size_t>(i)];
        const Vec3 n = g.normal();
        const double denom = n.dot(ray.direction);
        if (std::abs(denom) < 1e-12) {
            continue;
        }
        const double t = n.dot(g.position - ray.origin) / denom;
        if (t <= 0.0) {
            continue;
        }
        const Vec3 x = ray.origin + t * ray.direction;
        const Vec3 d = x - g.position;
        const double a = g.axis_u().dot(d) / g.scale.x();
        const double b = g.axis_v().dot(d) / g.scale.y();
        const double alpha = 1.0 / (1.0 + std::exp(-g.opacity_logit)) * std::exp(-0.5 * (a * a + b * b));
        const Rgb c = shade(scene, i, x, ray.direction);
        if (mass) {
            if (alpha < 1.0 / 255.0) {
                mass->skipped_alpha += alpha;
            }
            mass->max_color = std::max(mass->max_color, c.cwiseAbs().maxCoeff());
        }
        color += transmittance * alpha * c;
        transmittance *= 1.0 - alpha;
    }
    if (mass) {
        mass->max_color = std::max(mass->max_color, scene.background.cwiseAbs().maxCoeff());
    }
    return color + transmittance * scene.background;
}

inline Image brute_force_render(const Scene& scene, const Camera& camera) {
    const auto order = reference_order(scene, camera);
    Image out(camera.width, camera.height, 3);
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            out.set_rgb(x, y, brute_force_pixel(scene, order, camera.pixel_ray(x, y)));
        }
    }
    return out;
}

inline double max_abs_diff(const Image& a, const Image& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    }
    return worst;
}

inline bool bit_identical(const Image& a, const Image& b) {
    return a.same_shape(b) && a.data == b.data;
}

struct GradientCheck {
    int checked = 0;
    int failed = 0;
    // Largest |analytic - fd| / (rel * max(|analytic|, |fd|) + abs); <= 1 passes.
    double worst_ratio = 0.0;
    std::string worst;
};

/// Compares every analytic gradient entry of `backward` with central differences
/// of the full loss.
inline GradientCheck gradient_check(const Scene& scene, const Camera& camera, const Image& target, double h = 1e-4,
                                    double rel = 1e-4, double abs_floor = 1e-8, double lambda = kDssimWeight) {
    GradientBuffer grads = GradientBuffer::like(scene);
    backward(scene, camera, target, grads, {lambda, 1});
    Scene probe = scene;
    GradientCheck result;
    auto compare = [&](double& param, double analytic, const std::string& name) {
        const double saved = param;
        param = saved + h;
        const double up = loss(render(probe, camera).color, target, lambda).total;
        param = saved - h;
        const double down = loss(render(probe, camera).color, target, lambda).total;
        param = saved;
        const double fd = (up - down) / (2.0 * h);
        const double ratio = std::abs(analytic - fd) / (rel * std::max(std::abs(analytic), std::abs(fd)) + abs_floor);
        ++result.checked;
        if (ratio > 1.0) {
            ++result.failed;
        }
        if (ratio > result.worst_ratio) {
            result.worst_ratio = ratio;
            result.worst = name + " analytic=" + std::to_string(analytic) + " fd=" + std::to_string(fd);
        }
    };
    for (std::size_t i = 0; i < probe.atlas.texels.size(); ++i) {
        compare(probe.atlas.texels[i], grads.d_texels[i], "texel[" + std::to_string(i) + "]");
    }
    for (std::size_t g = 0; g < probe.gaussians.size(); ++g) {
        auto& prim = probe.gaussians[g];
        for (std::size_t k = 0; k < prim.sh_residual.size(); ++k) {
            compare(prim.sh_residual[k], grads.d_sh[g * static_cast<std::size_t>(grads.sh_stride) + k],
                    "sh[" + std::to_string(g) + "][" + std::to_string(k) + "]");
        }
        compare(prim.opacity_logit, grads.d_opacity[g], "opacity[" + std::to_string(g) + "]");
    }
    return result;
}

} // namespace texgs::test
