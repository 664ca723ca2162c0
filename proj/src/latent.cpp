#include "vip3de/latent.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace vip3de {

bool LatentVideo::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

LatentVideo LatentVideo::extract_frame(int n) const {
    const int ids[] = {n};
    return gather(ids);
}

LatentVideo LatentVideo::gather(std::span<const int> ids) const {
    LatentVideo out(static_cast<int>(ids.size()), channels, height, width);
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= frames) throw InvalidArgument("latent gather: frame index out of range");
        auto src = frame(ids[i]);
        std::copy(src.begin(), src.end(), out.frame(static_cast<int>(i)).begin());
    }
    return out;
}

void LatentVideo::scatter(const LatentVideo& src, std::span<const int> ids) {
    if (!same_frame_shape(src) || static_cast<size_t>(src.frames) != ids.size()) {
        throw InvalidArgument("latent scatter: shape mismatch");
    }
    for (size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= frames) throw InvalidArgument("latent scatter: frame index out of range");
        auto s = src.frame(static_cast<int>(i));
        std::copy(s.begin(), s.end(), frame(ids[i]).begin());
    }
}

double l2_norm(const LatentVideo& x) {
    double s = 0.0;
    for (double v : x.data) s += v * v;
    return std::sqrt(s);
}

double l2_distance(const LatentVideo& a, const LatentVideo& b) {
    if (!a.same_shape(b)) throw InvalidArgument("l2_distance: shape mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double mean_abs_distance(const LatentVideo& a, const LatentVideo& b) {
    if (!a.same_shape(b)) throw InvalidArgument("mean_abs_distance: shape mismatch");
    if (a.data.empty()) return 0.0;
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
}

LatentVideo gaussian_noise(int n, int c, int h, int w, double sigma, std::uint64_t seed) {
    LatentVideo out(n, c, h, w);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : out.data) v = sigma * dist(rng);
    return out;
}

}  // namespace vip3de
