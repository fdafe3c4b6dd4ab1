#pragma once

#include "texgs/geometry.hpp"

#include <array>
#include <span>
#include <vector>

namespace texgs {

/// Jagged store of every primitive's texture map.
///
/// Primitive i owns texels [prefix[i], prefix[i+1]) of the flat array, laid out
/// row-major (index = v * U + u). Each texel is three consecutive doubles.
struct TextureAtlas {
    std::vector<double> texels;
    std::vector<std::int64_t> prefix{0};
    double texel_size = 0.0;
    // Texel budget the current allocation was solved for; reused on re-allocation.
    std::int64_t budget = 0;

    [[nodiscard]] std::int64_t texel_count() const { return static_cast<std::int64_t>(texels.size() / 3); }
    [[nodiscard]] bool empty() const { return texels.empty(); }

    [[nodiscard]] Rgb texel(std::int64_t index) const {
        const double* p = &texels[static_cast<std::size_t>(index) * 3];
        return {p[0], p[1], p[2]};
    }
    void set_texel(std::int64_t index, const Rgb& c) {
        double* p = &texels[static_cast<std::size_t>(index) * 3];
        p[0] = c.x();
        p[1] = c.y();
        p[2] = c.z();
    }
};

struct Scene {
    std::vector<TexturedGaussian> gaussians;
    TextureAtlas atlas;
    Rgb background = Rgb::Zero();
    int sh_degree = 0;

    [[nodiscard]] std::size_t size() const { return gaussians.size(); }
    [[nodiscard]] bool textured() const;
};

/// Throws ValidationError unless the prefix sums, per-primitive dims/offsets and the
/// texel array agree.
void check_consistency(const Scene& scene);

struct UV {
    double u = 0.0;
    double v = 0.0;
};

struct TextureDims {
    int width = 1;
    int height = 1;
    friend bool operator==(const TextureDims&, const TextureDims&) = default;
};

UV world_to_uv(const TexturedGaussian& g, const Vec3& x, double texel_size);

/// World-space center of texel (u, v); throws std::out_of_range outside the map.
Vec3 uv_to_world(const TexturedGaussian& g, int u, int v, double texel_size);

/// The four atlas texels and weights that bilinear sampling blends at `uv`, after
/// clamping uv to [0, U-1] x [0, V-1]. Weights always sum to one.
struct BilinearFootprint {
    std::array<std::int64_t, 4> index{};
    std::array<double, 4> weight{};
};

BilinearFootprint bilinear_footprint(const TexturedGaussian& g, const UV& uv);

Rgb sample_bilinear(const TextureAtlas& atlas, const TexturedGaussian& g, const UV& uv);
Rgb sample_footprint(const TextureAtlas& atlas, const BilinearFootprint& fp);

/// Texture map size covering +-3 standard deviations: ceil(6 s / texel_size).
/// Ratios within 1e-9 (relative) of an integer are snapped to it before the ceiling.
TextureDims allocate_dims(double s1, double s2, double texel_size);

std::int64_t total_texels(std::span<const Vec2> scales, double texel_size);

struct TexelSizeSolution {
    double texel_size = 0.0;
    std::int64_t total = 0;
    bool within_tolerance = false;
    int iterations = 0;
    std::string diagnostic;
};

inline constexpr double kTexelBudgetTolerance = 1e-3;
inline constexpr int kTexelSearchMaxSteps = 200;

/// Bisection for a texel size whose total allocation is within 0.1% of `budget`.
/// Never throws for unattainable budgets; the result carries the nearest total found.
TexelSizeSolution search_texel_size(std::span<const Vec2> scales, std::int64_t budget);

class TexelBudgetError : public NumericalError {
public:
    TexelBudgetError(const std::string& what, TexelSizeSolution nearest)
        : NumericalError(what), nearest_(std::move(nearest)) {}
    [[nodiscard]] const TexelSizeSolution& nearest() const { return nearest_; }

private:
    TexelSizeSolution nearest_;
};

/// As search_texel_size, but throws TexelBudgetError when no texel size in the
/// search bracket meets the tolerance.
double solve_texel_size(std::span<const Vec2> scales, std::int64_t budget);

/// Sizes every texture map for `budget` texels and zero-fills the atlas. When no texel
/// size meets the 0.1% tolerance, the nearest achievable total is used.
/// A budget of 0 disables spatial variation: each map becomes a single texel.
void allocate_textures(Scene& scene, std::int64_t budget);

/// Sizes every texture map for an explicit texel size and zero-fills the atlas. The
/// recorded budget is the resulting total.
void allocate_with_texel_size(Scene& scene, double texel_size);

/// Re-sizes every map for `texel_size` and fills new texels by sampling the old maps
/// at the new texel centers. Primitives whose dims and texel size are unchanged keep
/// their texels verbatim; the returned mask flags them.
std::vector<bool> reinit_resample(Scene& scene, double texel_size);

/// reinit_resample with the texel size re-solved from the atlas budget.
std::vector<bool> reinit_resample_budget(Scene& scene);

/// Fills each map with the base color of its degree-0 SH coefficient, kShC0 * c0 + 0.5.
void init_from_sh0(Scene& scene);

/// Base color the renderer uses for an untextured primitive.
inline Rgb sh0_base_color(const TexturedGaussian& g) {
    return (kShC0 * g.sh_dc.array() + 0.5).matrix();
}

} // namespace texgs
