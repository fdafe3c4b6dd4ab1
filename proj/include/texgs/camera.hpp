#pragma once

#include "texgs/geometry.hpp"

namespace texgs {

/// Pinhole camera. Internal convention: camera looks down +z, x right, y down.
struct Camera {
    Mat4 camera_to_world = Mat4::Identity();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
    double near = 0.01;
    double far = 100.0;

    [[nodiscard]] Vec3 center() const { return camera_to_world.block<3, 1>(0, 3); }
    [[nodiscard]] Mat3 rotation() const { return camera_to_world.block<3, 3>(0, 0); }

    /// Camera-space coordinates of a world point.
    [[nodiscard]] Vec3 to_camera(const Vec3& world) const {
        return rotation().transpose() * (world - center());
    }

    /// Ray through the center of pixel (x, y).
    [[nodiscard]] Ray pixel_ray(int x, int y) const;

    /// Horizontal-FOV constructor: fx = fy = 0.5 * width / tan(0.5 * fov_x), principal
    /// point at the image center.
    static Camera from_fov(const Mat4& camera_to_world, double fov_x, int width, int height,
                           double near = 0.01, double far = 100.0);

    /// Camera at `eye` looking at `target` with `up` pointing toward the top of the image.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width,
                          int height, double near = 0.01, double far = 100.0);
};

void validate(const Camera& camera);

/// Converts a camera-to-world matrix in the OpenGL/Blender convention (looks down -z,
/// y up) to the internal one, and back.
Mat4 opengl_to_internal(const Mat4& camera_to_world);
Mat4 internal_to_opengl(const Mat4& camera_to_world);

} // namespace texgs
