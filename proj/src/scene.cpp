#include "vip3de/scene.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vip3de {

namespace {

constexpr double kNearPlane = 1e-6;

void check_views(const std::vector<SupervisionView>& views) {
    if (views.empty()) {
        throw InvalidArgument("no supervision");
    }
    for (const auto& view : views) {
        view.camera.validate();
        if (view.target.width != view.camera.width || view.target.height != view.camera.height ||
            view.target.channels != 3) {
            throw InvalidArgument("update_scene: target image does not match camera size");
        }
        if (view.mask && (view.mask->width != view.camera.width || view.mask->height != view.camera.height)) {
            throw InvalidArgument("update_scene: mask does not match camera size");
        }
    }
}

// Per-view loss normalization: views are averaged, pixels and channels are averaged within a view.
double view_weight(const SupervisionView& view, size_t view_count) {
    return 1.0 / (3.0 * static_cast<double>(view.target.pixel_count()) * static_cast<double>(view_count));
}

double masked_l1(const std::vector<SupervisionView>& views, const std::vector<std::vector<int>>& winners,
                 const std::vector<ScenePoint>& points, const Vec3& background) {
    double total = 0.0;
    for (size_t v = 0; v < views.size(); ++v) {
        const auto& view = views[v];
        const auto& win = winners[v];
        double sum = 0.0;
        for (size_t p = 0; p < win.size(); ++p) {
            if (view.mask && view.mask->data[p] == 0) continue;
            const Vec3& c = win[p] >= 0 ? points[static_cast<size_t>(win[p])].color : background;
            for (int ch = 0; ch < 3; ++ch) {
                sum += std::abs(c[ch] - view.target.data[p * 3 + static_cast<size_t>(ch)]);
            }
        }
        total += sum * view_weight(view, views.size());
    }
    return total;
}

}  // namespace

void PointScene::validate() const {
    for (size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (!p.position.allFinite()) {
            throw InvalidArgument("point " + std::to_string(i) + ": position is not finite");
        }
        if ((p.color.array() < 0.0).any() || (p.color.array() > 1.0).any()) {
            throw InvalidArgument("point " + std::to_string(i) + ": color outside [0,1]");
        }
        if (!(p.radius > 0.0)) {
            throw InvalidArgument("point " + std::to_string(i) + ": radius must be positive");
        }
    }
}

RenderedFrame render(const PointScene& scene, const Camera& camera, const RenderOptions& options) {
    camera.validate();
    const int w = camera.width;
    const int h = camera.height;
    RenderedFrame frame;
    frame.rgb = Image(w, h, 3);
    frame.depth = DepthMap(w, h);
    frame.point_index.assign(static_cast<size_t>(w) * h, -1);

    auto splat = [&](int x, int y, double z, int index) {
        const size_t p = static_cast<size_t>(y) * w + x;
        if (z < frame.depth.data[p]) {
            frame.depth.data[p] = z;
            frame.point_index[p] = index;
        }
    };

    for (size_t i = 0; i < scene.points.size(); ++i) {
        const auto& point = scene.points[i];
        const Vec3 pc = camera.to_camera(point.position);
        const double z = pc.z();
        if (z <= kNearPlane) continue;
        const Vec3 proj = camera.K * pc;
        const double u = proj.x() / z;
        const double v = proj.y() / z;
        const double r = point.radius * camera.fx() / z;
        const int index = static_cast<int>(i);

        const int x0 = std::max(0, static_cast<int>(std::ceil(u - r)));
        const int x1 = std::min(w - 1, static_cast<int>(std::floor(u + r)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(v - r)));
        const int y1 = std::min(h - 1, static_cast<int>(std::floor(v + r)));
        const double r2 = r * r;
        for (int y = y0; y <= y1; ++y) {
            const double dy = y - v;
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - u;
                if (dx * dx + dy * dy <= r2) splat(x, y, z, index);
            }
        }
    }

    for (size_t p = 0; p < frame.point_index.size(); ++p) {
        const int idx = frame.point_index[p];
        const Vec3& c = idx >= 0 ? scene.points[static_cast<size_t>(idx)].color : options.background;
        for (int ch = 0; ch < 3; ++ch) frame.rgb.data[p * 3 + static_cast<size_t>(ch)] = c[ch];
    }
    return frame;
}

std::vector<RenderedFrame> render_all(const PointScene& scene, const std::vector<Camera>& cameras,
                                      const RenderOptions& options) {
    std::vector<RenderedFrame> frames(cameras.size());
    parallel_for(cameras.size(), [&](size_t i) { frames[i] = render(scene, cameras[i], options); });
    return frames;
}

double supervision_loss(const PointScene& scene, const std::vector<SupervisionView>& views,
                        const RenderOptions& options) {
    check_views(views);
    std::vector<std::vector<int>> winners(views.size());
    for (size_t v = 0; v < views.size(); ++v) {
        winners[v] = render(scene, views[v].camera, options).point_index;
    }
    return masked_l1(views, winners, scene.points, options.background);
}

UpdateResult update_scene(const PointScene& scene, const std::vector<SupervisionView>& views, int iters,
                          double lr, const RenderOptions& options) {
    check_views(views);
    if (iters < 1) throw InvalidArgument("update_scene: iters must be >= 1");
    if (!(lr > 0.0)) throw InvalidArgument("update_scene: lr must be positive");

    const size_t n = scene.points.size();
    const size_t view_count = views.size();
    std::vector<std::vector<int>> winners(view_count);
    parallel_for(view_count, [&](size_t v) { winners[v] = render(scene, views[v].camera, options).point_index; });

    // Masked pixel weight of each point; zero means the point receives no supervision.
    std::vector<double> weight(n, 0.0);
    for (size_t v = 0; v < view_count; ++v) {
        const double wv = view_weight(views[v], view_count);
        for (size_t p = 0; p < winners[v].size(); ++p) {
            const int idx = winners[v][p];
            if (idx < 0) continue;
            if (views[v].mask && views[v].mask->data[p] == 0) continue;
            weight[static_cast<size_t>(idx)] += wv;
        }
    }

    UpdateResult result;
    result.scene = scene;
    auto& points = result.scene.points;
    result.loss.reserve(static_cast<size_t>(iters) + 1);
    result.loss.push_back(masked_l1(views, winners, points, options.background));

    std::vector<std::vector<double>> view_grad(view_count, std::vector<double>(3 * n, 0.0));
    std::vector<double> grad(3 * n, 0.0);
    for (int k = 0; k < iters; ++k) {
        parallel_for(view_count, [&](size_t v) {
            auto& g = view_grad[v];
            std::fill(g.begin(), g.end(), 0.0);
            const auto& view = views[v];
            const double wv = view_weight(view, view_count);
            for (size_t p = 0; p < winners[v].size(); ++p) {
                const int idx = winners[v][p];
                if (idx < 0) continue;
                if (view.mask && view.mask->data[p] == 0) continue;
                const auto& c = points[static_cast<size_t>(idx)].color;
                for (int ch = 0; ch < 3; ++ch) {
                    const double diff = c[ch] - view.target.data[p * 3 + static_cast<size_t>(ch)];
                    const double sign = (diff > 0.0) - (diff < 0.0);
                    g[static_cast<size_t>(idx) * 3 + static_cast<size_t>(ch)] += sign * wv;
                }
            }
        });
        std::fill(grad.begin(), grad.end(), 0.0);
        for (size_t v = 0; v < view_count; ++v) {
            for (size_t j = 0; j < grad.size(); ++j) grad[j] += view_grad[v][j];
        }

        const double step = lr * static_cast<double>(iters - k) / static_cast<double>(iters);
        for (size_t i = 0; i < n; ++i) {
            if (weight[i] <= 0.0) continue;
            for (int ch = 0; ch < 3; ++ch) {
                const double g = grad[i * 3 + static_cast<size_t>(ch)];
                if (g == 0.0) continue;
                double& c = points[i].color[ch];
                c = std::clamp(c - step * g / weight[i], 0.0, 1.0);
            }
        }
        result.loss.push_back(masked_l1(views, winners, points, options.background));
    }
    return result;
}

}  // namespace vip3de
