#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Geometry>

#include "vip3de/camera.hpp"

namespace vip3de {

using Quat = Eigen::Quaterniond;

struct CameraPath {
    std::vector<Camera> cameras;
    std::vector<int> key_indices;

    size_t size() const { return cameras.size(); }
    // Throws InvalidArgument unless there are >= 2 cameras and key_indices
    // is strictly increasing from 0 to size() - 1.
    void validate() const;
};

// Angle between optical axes (radians) plus center distance in units of scene_radius.
double view_change_distance(const Camera& a, const Camera& b, double scene_radius);

// Greedy nearest-neighbour chain. Starts from the camera farthest from the
// centroid view (mean center, normalized mean axis) and repeatedly appends the
// closest unvisited camera. Ties resolve to the lowest input index.
// Returns the permutation of input indices.
std::vector<int> sort_cameras(const std::vector<Camera>& cameras, double scene_radius);

// Shortest-arc spherical interpolation with q(0) = a and q(1) = b.
// Falls back to normalized lerp when the arc is below 1e-6 rad.
Quat slerp(const Quat& a, const Quat& b, double k);

Quat rotation_to_quat(const Mat3& r);
Mat3 quat_to_rotation(const Quat& q);

// `count` cameras strictly between a and b at k = i / (count + 1).
// Rotations are slerped; camera centers are interpolated linearly, so the
// world->camera translation follows as t = -R c. Intrinsics come from a.
std::vector<Camera> interpolate_cameras(const Camera& a, const Camera& b, int count);

struct TrajectoryOptions {
    // Perturb interior key positions inside their stratum of the sorted order.
    bool jitter_keys = false;
    std::uint64_t seed = 0;
};

// Sorts the training cameras, picks key_count keys spread over the sorted
// order and fills the frames_total - key_count remaining slots with
// interpolated cameras, allotted to segments in proportion to their
// view-change distance (largest remainder, ties to the earlier segment).
CameraPath build_trajectory(const std::vector<Camera>& training, int key_count, int frames_total,
                            double scene_radius, const TrajectoryOptions& options = {});

// Sum of adjacent view-change distances along the path.
double path_length(const std::vector<Camera>& cameras, double scene_radius);

}  // namespace vip3de
