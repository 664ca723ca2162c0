#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vip3de/common.hpp"

namespace vip3de {

// N x C x h x w stack of latent grids, frame-major.
struct LatentVideo {
    int frames = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    LatentVideo() = default;
    LatentVideo(int n, int c, int h, int w, double fill = 0.0)
        : frames(n), channels(c), height(h), width(w), data(static_cast<size_t>(n) * c * h * w, fill) {}

    size_t frame_size() const { return static_cast<size_t>(channels) * height * width; }
    size_t size() const { return data.size(); }

    size_t index(int n, int c, int y, int x) const {
        return ((static_cast<size_t>(n) * channels + c) * height + y) * width + x;
    }
    double& at(int n, int c, int y, int x) { return data[index(n, c, y, x)]; }
    double at(int n, int c, int y, int x) const { return data[index(n, c, y, x)]; }

    std::span<double> frame(int n) { return {data.data() + n * frame_size(), frame_size()}; }
    std::span<const double> frame(int n) const { return {data.data() + n * frame_size(), frame_size()}; }

    bool same_shape(const LatentVideo& o) const {
        return frames == o.frames && channels == o.channels && height == o.height && width == o.width;
    }
    bool same_frame_shape(const LatentVideo& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    bool all_finite() const;

    // Single-frame latent holding frame n.
    LatentVideo extract_frame(int n) const;
    // Frames listed in ids, in that order.
    LatentVideo gather(std::span<const int> ids) const;
    // Writes frames of src to positions ids (src.frames == ids.size()).
    void scatter(const LatentVideo& src, std::span<const int> ids);
};

double l2_norm(const LatentVideo& x);
double l2_distance(const LatentVideo& a, const LatentVideo& b);
double mean_abs_distance(const LatentVideo& a, const LatentVideo& b);

// i.i.d. N(0, sigma^2) entries from a seeded 64-bit Mersenne twister.
LatentVideo gaussian_noise(int n, int c, int h, int w, double sigma, std::uint64_t seed);

}  // namespace vip3de
