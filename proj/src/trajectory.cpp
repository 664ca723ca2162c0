#include "vip3de/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace vip3de {

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kSlerpLinearThreshold = 1e-6;

double axis_angle(const Vec3& a, const Vec3& b) {
    const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
    return std::acos(c);
}

}  // namespace

void CameraPath::validate() const {
    if (cameras.size() < 2) throw InvalidArgument("trajectory too short");
    if (key_indices.empty() || key_indices.front() != 0 ||
        key_indices.back() != static_cast<int>(cameras.size()) - 1) {
        throw InvalidArgument("trajectory: keys must start at 0 and end at the last camera");
    }
    for (size_t i = 1; i < key_indices.size(); ++i) {
        if (key_indices[i] <= key_indices[i - 1]) {
            throw InvalidArgument("trajectory: key indices must be strictly increasing");
        }
    }
    for (const auto& cam : cameras) cam.validate();
}

double view_change_distance(const Camera& a, const Camera& b, double scene_radius) {
    if (!(scene_radius > 0.0)) throw InvalidArgument("view_change_distance: scene_radius must be positive");
    return axis_angle(a.axis(), b.axis()) + (a.center() - b.center()).norm() / scene_radius;
}

std::vector<int> sort_cameras(const std::vector<Camera>& cameras, double scene_radius) {
    if (cameras.size() < 2) throw InvalidArgument("sort_cameras: need at least 2 cameras");
    if (!(scene_radius > 0.0)) throw InvalidArgument("sort_cameras: scene_radius must be positive");
    const size_t n = cameras.size();

    Vec3 mean_center = Vec3::Zero();
    Vec3 mean_axis = Vec3::Zero();
    for (const auto& cam : cameras) {
        mean_center += cam.center();
        mean_axis += cam.axis();
    }
    mean_center /= static_cast<double>(n);
    const bool has_axis = mean_axis.norm() > 1e-9;

    size_t start = 0;
    double best = -1.0;
    for (size_t i = 0; i < n; ++i) {
        double d = (cameras[i].center() - mean_center).norm() / scene_radius;
        if (has_axis) d += axis_angle(cameras[i].axis(), mean_axis);
        if (d > best) {
            best = d;
            start = i;
        }
    }

    std::vector<int> order{static_cast<int>(start)};
    std::vector<bool> used(n, false);
    used[start] = true;
    for (size_t step = 1; step < n; ++step) {
        const Camera& tail = cameras[static_cast<size_t>(order.back())];
        size_t next = n;
        double next_d = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (used[j]) continue;
            const double d = view_change_distance(tail, cameras[j], scene_radius);
            if (next == n || d < next_d) {
                next = j;
                next_d = d;
            }
        }
        used[next] = true;
        order.push_back(static_cast<int>(next));
    }
    return order;
}

Quat slerp(const Quat& a, const Quat& b, double k) {
    if (std::abs(a.norm() - 1.0) > kUnitTolerance || std::abs(b.norm() - 1.0) > kUnitTolerance) {
        throw InvalidArgument("slerp: quaternions must have unit norm");
    }
    double dot = a.coeffs().dot(b.coeffs());
    Eigen::Vector4d target = b.coeffs();
    if (dot < 0.0) {
        dot = -dot;
        target = -target;
    }
    const double theta = std::acos(std::min(1.0, dot));
    Eigen::Vector4d out;
    if (theta < kSlerpLinearThreshold) {
        out = ((1.0 - k) * a.coeffs() + k * target).normalized();
    } else {
        const double s = std::sin(theta);
        out = (std::sin((1.0 - k) * theta) / s) * a.coeffs() + (std::sin(k * theta) / s) * target;
        out.normalize();
    }
    Quat q;
    q.coeffs() = out;
    return q;
}

Quat rotation_to_quat(const Mat3& r) { return Quat(r).normalized(); }

Mat3 quat_to_rotation(const Quat& q) { return q.normalized().toRotationMatrix(); }

std::vector<Camera> interpolate_cameras(const Camera& a, const Camera& b, int count) {
    if (count < 0) throw InvalidArgument("interpolate_cameras: count must be >= 0");
    if (!a.same_intrinsics(b)) throw InvalidArgument("interpolate_cameras: cameras must share intrinsics");
    const Quat qa = rotation_to_quat(a.R);
    const Quat qb = rotation_to_quat(b.R);
    const Vec3 ca = a.center();
    const Vec3 cb = b.center();
    std::vector<Camera> out;
    out.reserve(static_cast<size_t>(count));
    for (int i = 1; i <= count; ++i) {
        const double k = static_cast<double>(i) / static_cast<double>(count + 1);
        Camera cam = a;
        cam.R = quat_to_rotation(slerp(qa, qb, k));
        const Vec3 c = (1.0 - k) * ca + k * cb;
        cam.t = -cam.R * c;
        out.push_back(cam);
    }
    return out;
}

double path_length(const std::vector<Camera>& cameras, double scene_radius) {
    double total = 0.0;
    for (size_t i = 1; i < cameras.size(); ++i) {
        total += view_change_distance(cameras[i - 1], cameras[i], scene_radius);
    }
    return total;
}

CameraPath build_trajectory(const std::vector<Camera>& training, int key_count, int frames_total,
                            double scene_radius, const TrajectoryOptions& options) {
    if (key_count < 2) throw InvalidArgument("build_trajectory: key_count must be >= 2");
    if (frames_total < key_count) throw InvalidArgument("build_trajectory: frames_total < key_count");
    if (static_cast<int>(training.size()) < key_count) {
        throw InvalidArgument("build_trajectory: fewer training cameras than keys");
    }
    for (size_t i = 1; i < training.size(); ++i) {
        if (!training[i].same_intrinsics(training[0])) {
            throw InvalidArgument("build_trajectory: training cameras must share intrinsics");
        }
    }

    const std::vector<int> order = sort_cameras(training, scene_radius);
    const int m = static_cast<int>(order.size());
    const double spacing = static_cast<double>(m - 1) / static_cast<double>(key_count - 1);

    std::vector<int> picks(static_cast<size_t>(key_count));
    std::mt19937_64 rng(options.seed);
    for (int j = 0; j < key_count; ++j) {
        const double base = spacing * j;
        int pick = static_cast<int>(std::lround(base));
        if (options.jitter_keys && j > 0 && j < key_count - 1) {
            const int lo = std::max(picks[static_cast<size_t>(j - 1)] + 1,
                                    static_cast<int>(std::ceil(base - 0.5 * spacing)));
            const int hi = std::min(m - key_count + j, static_cast<int>(std::floor(base + 0.5 * spacing)));
            pick = lo <= hi ? std::uniform_int_distribution<int>(lo, hi)(rng) : lo;
        }
        if (j > 0) pick = std::max(pick, picks[static_cast<size_t>(j - 1)] + 1);
        picks[static_cast<size_t>(j)] = pick;
    }

    std::vector<Camera> keys;
    for (int p : picks) keys.push_back(training[static_cast<size_t>(order[static_cast<size_t>(p)])]);

    const size_t segments = keys.size() - 1;
    std::vector<double> dist(segments);
    for (size_t s = 0; s < segments; ++s) dist[s] = view_change_distance(keys[s], keys[s + 1], scene_radius);
    double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    if (total <= 0.0) {
        std::fill(dist.begin(), dist.end(), 1.0);
        total = static_cast<double>(segments);
    }

    const int extra = frames_total - key_count;
    std::vector<int> alloc(segments);
    std::vector<double> frac(segments);
    int assigned = 0;
    for (size_t s = 0; s < segments; ++s) {
        const double quota = extra * dist[s] / total;
        alloc[s] = static_cast<int>(std::floor(quota));
        frac[s] = quota - alloc[s];
        assigned += alloc[s];
    }
    std::vector<size_t> by_frac(segments);
    std::iota(by_frac.begin(), by_frac.end(), 0);
    std::stable_sort(by_frac.begin(), by_frac.end(), [&](size_t x, size_t y) { return frac[x] > frac[y]; });
    for (size_t i = 0; assigned < extra; ++i, ++assigned) alloc[by_frac[i % segments]] += 1;

    CameraPath path;
    for (size_t s = 0; s < segments; ++s) {
        path.key_indices.push_back(static_cast<int>(path.cameras.size()));
        path.cameras.push_back(keys[s]);
        for (auto& cam : interpolate_cameras(keys[s], keys[s + 1], alloc[s])) path.cameras.push_back(cam);
    }
    path.key_indices.push_back(static_cast<int>(path.cameras.size()));
    path.cameras.push_back(keys.back());
    return path;
}

}  // namespace vip3de
