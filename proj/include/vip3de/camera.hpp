#pragma once

#include "vip3de/common.hpp"

namespace vip3de {

// Pinhole camera. R and t map world points into camera space (x_cam = R x + t),
// K maps camera space onto pixel coordinates where pixel (i, j) is centered
// at continuous coordinate (i, j).
struct Camera {
    Mat3 K = Mat3::Identity();
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();
    int width = 0;
    int height = 0;

    static Camera from_intrinsics(double fx, double fy, double cx, double cy, int width, int height);

    // Camera looking from eye toward target; image y points along -up.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double focal, int width,
                          int height);

    double fx() const { return K(0, 0); }
    double fy() const { return K(1, 1); }
    double cx() const { return K(0, 2); }
    double cy() const { return K(1, 2); }

    Vec3 center() const { return -R.transpose() * t; }
    // Optical axis in world coordinates.
    Vec3 axis() const { return R.row(2).transpose(); }

    Vec3 to_camera(const Vec3& world) const { return R * world + t; }

    bool same_intrinsics(const Camera& o) const;

    // Throws InvalidArgument if K or R break the camera invariants.
    void validate() const;
};

}  // namespace vip3de
