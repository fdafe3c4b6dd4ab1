#include "texgs/camera.hpp"

#include <cmath>

namespace texgs {

Ray Camera::pixel_ray(int x, int y) const {
    const Vec3 local((x + 0.5 - cx) / fx, (y + 0.5 - cy) / fy, 1.0);
    Ray ray;
    ray.origin = center();
    ray.direction = (rotation() * local).normalized();
    return ray;
}

Camera Camera::from_fov(const Mat4& camera_to_world, double fov_x, int width, int height, double near,
                        double far) {
    Camera cam;
    cam.camera_to_world = camera_to_world;
    cam.width = width;
    cam.height = height;
    cam.fx = 0.5 * width / std::tan(0.5 * fov_x);
    cam.fy = cam.fx;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.near = near;
    cam.far = far;
    return cam;
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_x, int width,
                       int height, double near, double far) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-12) {
        right = forward.unitOrthogonal();
    }
    right.normalize();
    const Vec3 down = forward.cross(right);
    Mat4 c2w = Mat4::Identity();
    c2w.block<3, 1>(0, 0) = right;
    c2w.block<3, 1>(0, 1) = down;
    c2w.block<3, 1>(0, 2) = forward;
    c2w.block<3, 1>(0, 3) = eye;
    return from_fov(c2w, fov_x, width, height, near, far);
}

void validate(const Camera& camera) {
    if (!(camera.fx > 0.0 && camera.fy > 0.0)) {
        throw ValidationError("camera focal lengths must be positive");
    }
    if (!(camera.near > 0.0 && camera.near < camera.far)) {
        throw ValidationError("camera needs 0 < near < far");
    }
    if (camera.width <= 0 || camera.height <= 0) {
        throw ValidationError("camera image size must be positive");
    }
    const Mat3 r = camera.rotation();
    if (!((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-6)) {
        throw ValidationError("camera rotation is not orthonormal");
    }
}

Mat4 opengl_to_internal(const Mat4& camera_to_world) {
    Mat4 flip = Mat4::Identity();
    flip(1, 1) = -1.0;
    flip(2, 2) = -1.0;
    return camera_to_world * flip;
}

Mat4 internal_to_opengl(const Mat4& camera_to_world) { return opengl_to_internal(camera_to_world); }

} // namespace texgs
