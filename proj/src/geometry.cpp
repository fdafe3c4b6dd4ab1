#include "texgs/geometry.hpp"

#include <cmath>
#include <string>

namespace texgs {

namespace {

constexpr double kShC1 = 0.4886025119029199;
constexpr std::array<double, 5> kShC2 = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                         -1.0925484305920792, 0.5462742152960396};
constexpr std::array<double, 7> kShC3 = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                         0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                         -0.5900435899266435};

} // namespace

int sh_degree_from_residual_length(std::size_t length) {
    for (int degree = 0; degree <= kMaxShDegree; ++degree) {
        if (static_cast<std::size_t>(sh_residual_length(degree)) == length) {
            return degree;
        }
    }
    throw ValidationError("invalid SH residual length " + std::to_string(length) +
                          " (expected 0, 9, 24 or 45)");
}

void TexturedGaussian::set_orientation(const Quat& q) {
    orientation = q;
    rotation = q.normalized().toRotationMatrix();
}

void validate(const TexturedGaussian& g) {
    const Mat3 gram = g.rotation.transpose() * g.rotation;
    if (!((gram - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6)) {
        throw ValidationError("rotation is not orthonormal");
    }
    if (!(g.scale.x() > 0.0 && g.scale.y() > 0.0)) {
        throw ValidationError("scales must be positive");
    }
    sh_degree_from_residual_length(g.sh_residual.size());
    if (g.tex_width < 0 || g.tex_height < 0 || (g.tex_width == 0) != (g.tex_height == 0)) {
        throw ValidationError("texture dimensions must both be zero or both positive");
    }
}

std::optional<Intersection> intersect(const Ray& ray, const TexturedGaussian& g) {
    const Vec3 n = g.normal();
    const double denom = n.dot(ray.direction);
    if (std::abs(denom) < kParallelEpsilon) {
        return std::nullopt;
    }
    const double t = n.dot(g.position - ray.origin) / denom;
    if (!(t > kRayNear)) {
        return std::nullopt;
    }
    Intersection hit;
    hit.t = t;
    hit.point = ray.origin + t * ray.direction;
    hit.alpha = eval_alpha(g, hit.point);
    return hit;
}

double gaussian_exponent(const TexturedGaussian& g, const Vec3& x) {
    const Vec3 d = x - g.position;
    const double a = g.axis_u().dot(d) / g.scale.x();
    const double b = g.axis_v().dot(d) / g.scale.y();
    return a * a + b * b;
}

double eval_alpha(const TexturedGaussian& g, const Vec3& x) {
    return g.opacity() * std::exp(-0.5 * gaussian_exponent(g, x));
}

std::array<double, 15> sh_basis_residual(int degree, const Vec3& dir) {
    std::array<double, 15> y{};
    if (degree < 1) {
        return y;
    }
    const double x = dir.x();
    const double yy = dir.y();
    const double z = dir.z();
    y[0] = -kShC1 * yy;
    y[1] = kShC1 * z;
    y[2] = -kShC1 * x;
    if (degree < 2) {
        return y;
    }
    const double xx = x * x;
    const double y2 = yy * yy;
    const double zz = z * z;
    y[3] = kShC2[0] * x * yy;
    y[4] = kShC2[1] * yy * z;
    y[5] = kShC2[2] * (2.0 * zz - xx - y2);
    y[6] = kShC2[3] * x * z;
    y[7] = kShC2[4] * (xx - y2);
    if (degree < 3) {
        return y;
    }
    y[8] = kShC3[0] * yy * (3.0 * xx - y2);
    y[9] = kShC3[1] * x * yy * z;
    y[10] = kShC3[2] * yy * (4.0 * zz - xx - y2);
    y[11] = kShC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * y2);
    y[12] = kShC3[4] * x * (4.0 * zz - xx - y2);
    y[13] = kShC3[5] * z * (xx - y2);
    y[14] = kShC3[6] * x * (xx - 3.0 * y2);
    return y;
}

Rgb eval_sh(std::span<const double> coeffs, const Vec3& dir) {
    const int degree = sh_degree_from_residual_length(coeffs.size());
    Rgb out = Rgb::Zero();
    if (degree == 0) {
        return out;
    }
    const auto basis = sh_basis_residual(degree, dir);
    const std::size_t count = coeffs.size() / 3;
    for (std::size_t k = 0; k < count; ++k) {
        out.x() += basis[k] * coeffs[3 * k];
        out.y() += basis[k] * coeffs[3 * k + 1];
        out.z() += basis[k] * coeffs[3 * k + 2];
    }
    return out;
}

} // namespace texgs
