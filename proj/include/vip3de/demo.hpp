#pragma once

#include <cstdint>
#include <vector>

#include "vip3de/scene.hpp"
#include "vip3de/trajectory.hpp"

namespace vip3de {

struct DemoOptions {
    int image_size = 128;
    // Points along each cube edge.
    int grid = 64;
    double side = 20.0;
    int training_views = 8;
    // Keys picked from the sorted training views.
    int key_views = 4;
    int frames = 25;
    // Camera distance from the cube center and elevation above its equator.
    double distance = 55.0;
    double elevation_deg = 25.0;
    // Azimuth range swept by the training arc.
    double arc_deg = 90.0;
    std::uint64_t seed = 0;
};

struct DemoData {
    PointScene scene;
    std::vector<Camera> training;
    CameraPath trajectory;
    double scene_radius = 1.0;
};

// Cube of colored points centered at the origin; every face carries its own
// smooth two-color gradient.
PointScene make_textured_cube(int grid, double side);

// Cube plus a shuffled arc of training cameras and the trajectory built from them.
DemoData make_demo(const DemoOptions& options = {});

}  // namespace vip3de
