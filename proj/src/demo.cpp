#include "vip3de/demo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace vip3de {

PointScene make_textured_cube(int grid, double side) {
    if (grid < 2) throw InvalidArgument("make_textured_cube: grid must be >= 2");
    if (!(side > 0.0)) throw InvalidArgument("make_textured_cube: side must be positive");
    const double h = side / 2.0;
    const double spacing = side / (grid - 1);
    // Per face: normal axis, sign and two gradient end colors.
    struct Face {
        int axis;
        double sign;
        Vec3 a;
        Vec3 b;
    };
    const Face faces[6] = {
        {0, 1.0, {0.85, 0.25, 0.20}, {0.95, 0.75, 0.25}}, {0, -1.0, {0.20, 0.55, 0.85}, {0.30, 0.85, 0.75}},
        {1, 1.0, {0.25, 0.70, 0.30}, {0.80, 0.90, 0.35}}, {1, -1.0, {0.55, 0.30, 0.70}, {0.90, 0.45, 0.65}},
        {2, 1.0, {0.90, 0.55, 0.20}, {0.35, 0.35, 0.80}}, {2, -1.0, {0.30, 0.30, 0.30}, {0.75, 0.75, 0.70}},
    };
    PointScene scene;
    for (const auto& f : faces) {
        const int u_axis = (f.axis + 1) % 3;
        const int v_axis = (f.axis + 2) % 3;
        for (int i = 0; i < grid; ++i) {
            for (int j = 0; j < grid; ++j) {
                const double s = static_cast<double>(i) / (grid - 1);
                const double t = static_cast<double>(j) / (grid - 1);
                ScenePoint p;
                p.position[f.axis] = f.sign * h;
                p.position[u_axis] = -h + i * spacing;
                p.position[v_axis] = -h + j * spacing;
                const double g = 0.5 * (s + t);
                const double ripple = 0.08 * std::sin(std::numbers::pi * s) * std::sin(std::numbers::pi * t);
                p.color = ((1.0 - g) * f.a + g * f.b + Vec3::Constant(ripple)).cwiseMax(0.0).cwiseMin(1.0);
                p.radius = 0.75 * spacing;
                scene.points.push_back(p);
            }
        }
    }
    return scene;
}

DemoData make_demo(const DemoOptions& o) {
    if (o.training_views < 2) throw InvalidArgument("make_demo: need at least two training views");
    if (o.key_views < 2 || o.key_views > o.training_views) throw InvalidArgument("make_demo: need 2 <= key_views <= training_views");
    DemoData d;
    d.scene = make_textured_cube(o.grid, o.side);
    d.scene_radius = o.side * std::sqrt(3.0) / 2.0;
    const double el = o.elevation_deg * std::numbers::pi / 180.0;
    const double focal = 1.1 * o.image_size;
    for (int i = 0; i < o.training_views; ++i) {
        const double az = (-0.5 + static_cast<double>(i) / (o.training_views - 1)) * o.arc_deg * std::numbers::pi / 180.0 +
                          std::numbers::pi / 4.0;
        const Vec3 eye(o.distance * std::cos(el) * std::cos(az), o.distance * std::sin(el),
                       o.distance * std::cos(el) * std::sin(az));
        d.training.push_back(Camera::look_at(eye, Vec3::Zero(), Vec3::UnitY(), focal, o.image_size, o.image_size));
    }
    // Unordered capture, as if the views came from a photo collection.
    std::mt19937_64 rng(o.seed);
    std::shuffle(d.training.begin(), d.training.end(), rng);
    d.trajectory = build_trajectory(d.training, o.key_views, o.frames, d.scene_radius);
    return d;
}

}  // namespace vip3de
