#pragma once

#include "texgs/common.hpp"

#include <array>
#include <optional>
#include <span>

namespace texgs {

inline constexpr double kParallelEpsilon = 1e-9;
inline constexpr double kRayNear = 1e-4;
inline constexpr int kMaxShDegree = 3;

// Degree-0 real SH constant, 1/(2*sqrt(pi)).
inline constexpr double kShC0 = 0.28209479177387814;

/// Number of SH basis functions for a given degree, (L+1)^2.
constexpr int sh_basis_count(int degree) { return (degree + 1) * (degree + 1); }

/// Length of the residual coefficient vector (degree-0 term excluded) for a given degree.
constexpr int sh_residual_length(int degree) { return 3 * (sh_basis_count(degree) - 1); }

/// Degree implied by a residual coefficient vector length; throws ValidationError
/// when the length does not correspond to a supported degree.
int sh_degree_from_residual_length(std::size_t length);

/// A planar Gaussian primitive with its own texture map.
///
/// The rotation matrix is the working representation (columns are the two tangent
/// axes and the normal); `orientation` holds the unit quaternion it was built from
/// so the primitive round-trips through the on-disk format without drift. Use
/// set_orientation() to change both together.
struct TexturedGaussian {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity();
    Mat3 rotation = Mat3::Identity();
    Vec2 scale = Vec2::Ones();
    double opacity_logit = 0.0;
    // Imported degree-0 SH coefficient. Only consulted while the primitive has no
    // texture (tex_width == 0) and by init_from_sh0.
    Rgb sh_dc = Rgb::Zero();
    // Coefficient-major: sh_residual[3 * (k - 1) + channel] for basis k >= 1.
    std::vector<double> sh_residual;
    int tex_width = 0;
    int tex_height = 0;
    std::int64_t tex_offset = 0;

    void set_orientation(const Quat& q);

    [[nodiscard]] Vec3 axis_u() const { return rotation.col(0); }
    [[nodiscard]] Vec3 axis_v() const { return rotation.col(1); }
    [[nodiscard]] Vec3 normal() const { return rotation.col(2); }
    [[nodiscard]] double opacity() const { return sigmoid(opacity_logit); }
    [[nodiscard]] bool textured() const { return tex_width > 0 && tex_height > 0; }
    [[nodiscard]] std::int64_t texel_count() const {
        return static_cast<std::int64_t>(tex_width) * tex_height;
    }
};

/// Throws ValidationError if the primitive breaks a structural invariant
/// (non-orthonormal rotation, non-positive scale, bad SH length).
void validate(const TexturedGaussian& g);

struct Ray {
    Vec3 origin = Vec3::Zero();
    Vec3 direction = Vec3::UnitZ();
};

struct Intersection {
    double t = 0.0;
    Vec3 point = Vec3::Zero();
    double alpha = 0.0;
};

/// Ray/primitive-plane intersection. Returns nullopt for grazing rays
/// (|n.d| < kParallelEpsilon) and for hits at t <= kRayNear.
std::optional<Intersection> intersect(const Ray& ray, const TexturedGaussian& g);

/// Gaussian alpha o * exp(-q/2) at a point on the primitive plane.
double eval_alpha(const TexturedGaussian& g, const Vec3& x);

/// Mahalanobis-style squared distance q used by eval_alpha.
double gaussian_exponent(const TexturedGaussian& g, const Vec3& x);

/// Real SH basis values for degrees 1..degree (index 0 of the result is Y_1^{-1}).
/// Uses the sign convention common to splatting code (Condon-Shortley phase).
std::array<double, 15> sh_basis_residual(int degree, const Vec3& dir);

/// View-dependent residual radiance: sum over basis k >= 1 of coeff_k * Y_k(dir).
Rgb eval_sh(std::span<const double> coeffs, const Vec3& dir);

} // namespace texgs
