#include "vip3de/camera.hpp"

#include <cmath>

namespace vip3de {

Camera Camera::from_intrinsics(double fx, double fy, double cx, double cy, int width, int height) {
    Camera cam;
    cam.K << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    cam.width = width;
    cam.height = height;
    return cam;
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
                       int height) {
    Camera cam = from_intrinsics(focal, focal, 0.5 * (width - 1), 0.5 * (height - 1), width, height);
    const Vec3 z = (target - eye).normalized();
    Vec3 x = (-up).cross(z);
    if (x.norm() < 1e-12) {
        throw InvalidArgument("look_at: up vector is parallel to the viewing direction");
    }
    x.normalize();
    const Vec3 y = z.cross(x);
    cam.R.row(0) = x.transpose();
    cam.R.row(1) = y.transpose();
    cam.R.row(2) = z.transpose();
    cam.t = -cam.R * eye;
    return cam;
}

bool Camera::same_intrinsics(const Camera& o) const {
    return width == o.width && height == o.height && (K - o.K).cwiseAbs().maxCoeff() <= 1e-12;
}

void Camera::validate() const {
    if (width <= 0 || height <= 0) {
        throw InvalidArgument("camera: image size must be positive");
    }
    if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0) || K(2, 2) != 1.0 || K(1, 0) != 0.0 || K(2, 0) != 0.0 ||
        K(2, 1) != 0.0) {
        throw InvalidArgument("camera: K must be upper-triangular with positive focal lengths and K22 = 1");
    }
    const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (!(ortho <= 1e-9) || R.determinant() <= 0.0) {
        throw InvalidArgument("camera: R must be a proper rotation");
    }
    if (!t.allFinite()) {
        throw InvalidArgument("camera: translation must be finite");
    }
}

}  // namespace vip3de
