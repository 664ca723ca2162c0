#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "vip3de/camera.hpp"
#include "vip3de/pipeline.hpp"

namespace vip3de {

// Camera-to-world poses.
struct PoseSequence {
    std::vector<Mat3> rotations;
    std::vector<Vec3> translations;

    size_t size() const { return rotations.size(); }
    void validate() const;
};

PoseSequence poses_from_cameras(const std::vector<Camera>& cameras);

// Left-multiplies every pose by the inverse of the first one.
PoseSequence align_to_first(const PoseSequence& poses);

// Sum over frames of the translation L2 error after aligning both sequences.
double trans_err(const PoseSequence& gt, const PoseSequence& est);

// Mean geodesic angle (radians) between aligned rotations.
double rotation_err(const PoseSequence& gt, const PoseSequence& est);

// Mean absolute color difference between pixels of frames >= 1 and the
// frame-0 pixels they map to at full resolution.
double reprojection_consistency(const std::vector<Image>& frames, const std::vector<DepthMap>& depths,
                                const std::vector<Camera>& cameras, double tau);

struct SweepRow {
    double eta = 0.0;
    std::uint64_t seed = 0;
    double pose_err = 0.0;
    double appearance_dist = 0.0;
};

// One pipeline run (without the 3D update) per (eta, seed). pose_err is the
// reprojection consistency of the edited frames under the true cameras,
// appearance_dist the mean absolute latent distance to the provider's target.
std::vector<SweepRow> eta_sweep(const PointScene& scene, const CameraPath& trajectory, const ToyEditor& editor,
                                const EditSpec& spec, const EditConfig& config, const DenoiserProvider& provider,
                                const std::vector<double>& etas, const std::vector<std::uint64_t>& seeds,
                                const RenderOptions& render = {});

struct SweepMean {
    double eta = 0.0;
    double pose_err = 0.0;
    double appearance_dist = 0.0;
};

// Seed-averaged rows in order of first appearance of each eta.
std::vector<SweepMean> average_over_seeds(const std::vector<SweepRow>& rows);

// Header `eta,seed,pose_err,appearance_dist`.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Line plot of the seed-averaged columns, each scaled to its own range
// (pose_err blue, appearance_dist red).
Image plot_sweep(const std::vector<SweepRow>& rows, int width = 480, int height = 320);

}  // namespace vip3de
