#include "texgs/texture_atlas.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace texgs {

bool Scene::textured() const {
    return !gaussians.empty() && gaussians.front().textured();
}

void check_consistency(const Scene& scene) {
    const std::size_t n = scene.gaussians.size();
    if (scene.atlas.texels.size() % 3 != 0) {
        throw ValidationError("atlas texel array length is not a multiple of 3");
    }
    if (!scene.textured()) {
        for (const auto& g : scene.gaussians) {
            if (g.textured()) {
                throw ValidationError("scene mixes textured and untextured primitives");
            }
        }
        if (!scene.atlas.texels.empty()) {
            throw ValidationError("untextured scene carries texels");
        }
        return;
    }
    const auto& prefix = scene.atlas.prefix;
    if (prefix.size() != n + 1 || prefix.front() != 0) {
        throw ValidationError("atlas prefix sums do not match the primitive count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& g = scene.gaussians[i];
        if (!g.textured()) {
            throw ValidationError("scene mixes textured and untextured primitives");
        }
        if (prefix[i + 1] - prefix[i] != g.texel_count() || g.tex_offset != prefix[i]) {
            std::ostringstream msg;
            msg << "inconsistent prefix sums at primitive " << i;
            throw ValidationError(msg.str());
        }
    }
    if (prefix.back() != scene.atlas.texel_count()) {
        throw ValidationError("texel count mismatch");
    }
    if (!(scene.atlas.texel_size > 0.0)) {
        throw ValidationError("textured scene needs a positive texel size");
    }
}

UV world_to_uv(const TexturedGaussian& g, const Vec3& x, double texel_size) {
    const Vec3 d = x - g.position;
    return {g.axis_u().dot(d) / texel_size + 0.5 * (g.tex_width - 1),
            g.axis_v().dot(d) / texel_size + 0.5 * (g.tex_height - 1)};
}

Vec3 uv_to_world(const TexturedGaussian& g, int u, int v, double texel_size) {
    if (u < 0 || v < 0 || u >= g.tex_width || v >= g.tex_height) {
        throw std::out_of_range("texel coordinate outside the texture map");
    }
    const double du = texel_size * (u - 0.5 * (g.tex_width - 1));
    const double dv = texel_size * (v - 0.5 * (g.tex_height - 1));
    return g.position + du * g.axis_u() + dv * g.axis_v();
}

BilinearFootprint bilinear_footprint(const TexturedGaussian& g, const UV& uv) {
    const double u = std::clamp(uv.u, 0.0, static_cast<double>(g.tex_width - 1));
    const double v = std::clamp(uv.v, 0.0, static_cast<double>(g.tex_height - 1));
    const int u0 = static_cast<int>(std::floor(u));
    const int v0 = static_cast<int>(std::floor(v));
    const int u1 = std::min(u0 + 1, g.tex_width - 1);
    const int v1 = std::min(v0 + 1, g.tex_height - 1);
    const double fu = u - u0;
    const double fv = v - v0;

    const std::int64_t row0 = g.tex_offset + static_cast<std::int64_t>(v0) * g.tex_width;
    const std::int64_t row1 = g.tex_offset + static_cast<std::int64_t>(v1) * g.tex_width;
    BilinearFootprint fp;
    fp.index = {row0 + u0, row0 + u1, row1 + u0, row1 + u1};
    fp.weight = {(1.0 - fu) * (1.0 - fv), fu * (1.0 - fv), (1.0 - fu) * fv, fu * fv};
    return fp;
}

Rgb sample_footprint(const TextureAtlas& atlas, const BilinearFootprint& fp) {
    Rgb c = Rgb::Zero();
    for (int k = 0; k < 4; ++k) {
        c += fp.weight[k] * atlas.texel(fp.index[k]);
    }
    return c;
}

Rgb sample_bilinear(const TextureAtlas& atlas, const TexturedGaussian& g, const UV& uv) {
    return sample_footprint(atlas, bilinear_footprint(g, uv));
}

namespace {

int texels_along(double extent, double texel_size) {
    const double ratio = extent / texel_size;
    const double nearest = std::round(ratio);
    const double snapped = std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest) ? nearest : ratio;
    return std::max(1, static_cast<int>(std::ceil(snapped)));
}

} // namespace

TextureDims allocate_dims(double s1, double s2, double texel_size) {
    if (!(s1 > 0.0 && s2 > 0.0 && texel_size > 0.0)) {
        throw ValidationError("allocate_dims needs positive scales and texel size");
    }
    return {texels_along(6.0 * s1, texel_size), texels_along(6.0 * s2, texel_size)};
}

std::int64_t total_texels(std::span<const Vec2> scales, double texel_size) {
    std::int64_t total = 0;
    for (const auto& s : scales) {
        const auto dims = allocate_dims(s.x(), s.y(), texel_size);
        total += static_cast<std::int64_t>(dims.width) * dims.height;
    }
    return total;
}

TexelSizeSolution search_texel_size(std::span<const Vec2> scales, std::int64_t budget) {
    if (scales.empty()) {
        throw ValidationError("texel size search needs at least one primitive");
    }
    if (budget < static_cast<std::int64_t>(scales.size())) {
        throw ValidationError("texel budget " + std::to_string(budget) + " is below the primitive count " +
                              std::to_string(scales.size()));
    }
    double area = 0.0;
    for (const auto& s : scales) {
        if (!(s.x() > 0.0 && s.y() > 0.0)) {
            throw ValidationError("texel size search needs positive scales");
        }
        area += 36.0 * s.x() * s.y();
    }

    const double target = static_cast<double>(budget);
    const double tolerance = kTexelBudgetTolerance * target;
    const double rho0 = std::sqrt(area / target);

    TexelSizeSolution best;
    best.total = -1;
    auto consider = [&](double rho, std::int64_t total) {
        if (best.total < 0 || std::abs(static_cast<double>(total) - target) <
                                  std::abs(static_cast<double>(best.total) - target)) {
            best.texel_size = rho;
            best.total = total;
        }
        return std::abs(static_cast<double>(total) - target) <= tolerance;
    };

    if (consider(rho0, total_texels(scales, rho0))) {
        best.within_tolerance = true;
        return best;
    }

    // Total texels is non-increasing in the texel size.
    double lo = rho0 / 16.0;
    double hi = 16.0 * rho0;
    for (int step = 1; step <= kTexelSearchMaxSteps; ++step) {
        const double mid = 0.5 * (lo + hi);
        const std::int64_t total = total_texels(scales, mid);
        best.iterations = step;
        if (consider(mid, total)) {
            best.within_tolerance = true;
            return best;
        }
        if (total > budget) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    std::ostringstream msg;
    msg << "no texel size in [" << rho0 / 16.0 << ", " << 16.0 * rho0 << "] reaches " << budget
        << " texels within 0.1%; nearest achievable is " << best.total << " texels at texel size "
        << best.texel_size;
    best.diagnostic = msg.str();
    return best;
}

double solve_texel_size(std::span<const Vec2> scales, std::int64_t budget) {
    auto solution = search_texel_size(scales, budget);
    if (!solution.within_tolerance) {
        const std::string what = solution.diagnostic;
        throw TexelBudgetError(what, std::move(solution));
    }
    return solution.texel_size;
}

namespace {

std::vector<Vec2> collect_scales(const Scene& scene) {
    std::vector<Vec2> scales;
    scales.reserve(scene.gaussians.size());
    for (const auto& g : scene.gaussians) {
        scales.push_back(g.scale);
    }
    return scales;
}

double texel_size_for_budget(const Scene& scene, std::int64_t budget) {
    if (budget == 0) {
        double widest = 0.0;
        for (const auto& g : scene.gaussians) {
            widest = std::max({widest, g.scale.x(), g.scale.y()});
        }
        return 6.0 * widest;
    }
    // Equal scales quantize the total coarsely; allocation settles for the nearest total.
    const auto scales = collect_scales(scene);
    return search_texel_size(scales, budget).texel_size;
}

void assign_dims(Scene& scene, double texel_size) {
    auto& atlas = scene.atlas;
    atlas.texel_size = texel_size;
    atlas.prefix.assign(1, 0);
    for (auto& g : scene.gaussians) {
        const auto dims = allocate_dims(g.scale.x(), g.scale.y(), texel_size);
        g.tex_width = dims.width;
        g.tex_height = dims.height;
        g.tex_offset = atlas.prefix.back();
        atlas.prefix.push_back(atlas.prefix.back() + g.texel_count());
    }
}

} // namespace

void allocate_textures(Scene& scene, std::int64_t budget) {
    if (budget < 0) {
        throw ValidationError("texel budget must be non-negative");
    }
    scene.atlas = TextureAtlas{};
    scene.atlas.budget = budget;
    if (scene.gaussians.empty()) {
        return;
    }
    assign_dims(scene, texel_size_for_budget(scene, budget));
    scene.atlas.texels.assign(static_cast<std::size_t>(scene.atlas.prefix.back()) * 3, 0.0);
}

void allocate_with_texel_size(Scene& scene, double texel_size) {
    if (!(texel_size > 0.0)) {
        throw ValidationError("texel size must be positive");
    }
    scene.atlas = TextureAtlas{};
    if (scene.gaussians.empty()) {
        return;
    }
    assign_dims(scene, texel_size);
    scene.atlas.budget = scene.atlas.prefix.back();
    scene.atlas.texels.assign(static_cast<std::size_t>(scene.atlas.prefix.back()) * 3, 0.0);
}

std::vector<bool> reinit_resample(Scene& scene, double texel_size) {
    check_consistency(scene);
    if (!scene.textured()) {
        throw ValidationError("reinit_resample needs an allocated atlas");
    }
    const Scene old = scene;
    assign_dims(scene, texel_size);
    auto& atlas = scene.atlas;
    atlas.texels.assign(static_cast<std::size_t>(atlas.prefix.back()) * 3, 0.0);

    std::vector<bool> preserved(scene.gaussians.size(), false);
    for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
        const auto& g = scene.gaussians[i];
        const auto& g_old = old.gaussians[i];
        if (texel_size == old.atlas.texel_size && g.tex_width == g_old.tex_width &&
            g.tex_height == g_old.tex_height) {
            std::copy_n(old.atlas.texels.begin() + g_old.tex_offset * 3, g.texel_count() * 3,
                        atlas.texels.begin() + g.tex_offset * 3);
            preserved[i] = true;
            continue;
        }
        for (int v = 0; v < g.tex_height; ++v) {
            for (int u = 0; u < g.tex_width; ++u) {
                const Vec3 center = uv_to_world(g, u, v, texel_size);
                const UV old_uv = world_to_uv(g_old, center, old.atlas.texel_size);
                atlas.set_texel(g.tex_offset + static_cast<std::int64_t>(v) * g.tex_width + u,
                                sample_bilinear(old.atlas, g_old, old_uv));
            }
        }
    }
    return preserved;
}

std::vector<bool> reinit_resample_budget(Scene& scene) {
    const double texel_size = texel_size_for_budget(scene, scene.atlas.budget);
    return reinit_resample(scene, texel_size);
}

void init_from_sh0(Scene& scene) {
    check_consistency(scene);
    if (!scene.textured()) {
        throw ValidationError("init_from_sh0 needs an allocated atlas");
    }
    for (const auto& g : scene.gaussians) {
        const Rgb base = sh0_base_color(g);
        for (std::int64_t k = 0; k < g.texel_count(); ++k) {
            scene.atlas.set_texel(g.tex_offset + k, base);
        }
    }
}

} // namespace texgs
