#pragma once

#include <optional>
#include <vector>

#include "vip3de/camera.hpp"
#include "vip3de/common.hpp"

namespace vip3de {

struct ScenePoint {
    Vec3 position = Vec3::Zero();
    Vec3 color = Vec3::Constant(0.5);  // rgb in [0,1]
    double radius = 0.01;              // world units; projects to radius * fx / z pixels
};

struct PointScene {
    std::vector<ScenePoint> points;

    size_t size() const { return points.size(); }
    void validate() const;
};

struct RenderOptions {
    Vec3 background = Vec3::Constant(0.5);
};

struct RenderedFrame {
    Image rgb;
    DepthMap depth;
    // Index of the winning point per pixel, -1 on background.
    std::vector<int> point_index;
};

// Hard z-buffer splatting: every point paints the pixel centers inside a disc
// of its projected radius, nearest camera-space z wins, ties go to the lower
// point index.
RenderedFrame render(const PointScene& scene, const Camera& camera, const RenderOptions& options = {});

// Renders every camera; frames are independent and rendered in parallel.
std::vector<RenderedFrame> render_all(const PointScene& scene, const std::vector<Camera>& cameras,
                                      const RenderOptions& options = {});

struct SupervisionView {
    Camera camera;
    Image target;
    std::optional<EditMask> mask;
};

struct UpdateResult {
    PointScene scene;
    // Masked L1 loss before the first step and after every step (iters + 1 values).
    std::vector<double> loss;
};

// Optimizes point colors against the target views with masked per-pixel L1.
// Geometry is frozen, so the z-buffer winner of every pixel is fixed and the
// loss is separable per point. Each step moves a color along its L1
// subgradient normalized by the point's masked pixel weight, with the step
// size decayed linearly from lr to lr / iters; colors are clamped to [0,1].
UpdateResult update_scene(const PointScene& scene, const std::vector<SupervisionView>& views, int iters,
                          double lr, const RenderOptions& options = {});

// Mean masked L1 between renders of scene and the supervision targets.
double supervision_loss(const PointScene& scene, const std::vector<SupervisionView>& views,
                        const RenderOptions& options = {});

}  // namespace vip3de
