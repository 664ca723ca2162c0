#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vip3de {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kInfDepth = std::numeric_limits<double>::infinity();

// Thrown when a caller violates an operation's precondition. The CLI maps
// these to exit code 2; anything else is a runtime failure.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Interleaved H x W x C image, row-major, values nominally in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 3;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c = 3, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

// Camera-space z per pixel; kInfDepth where nothing was rendered.
struct DepthMap {
    int width = 0;
    int height = 0;
    std::vector<double> data;

    DepthMap() = default;
    DepthMap(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h, kInfDepth) {}

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Binary per-view mask, 1 = editable.
struct EditMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    EditMask() = default;
    EditMask(int w, int h, std::uint8_t fill = 1)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    std::uint8_t& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    std::uint8_t at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

// Worker cap shared by all internal parallel loops. 0 means hardware concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(i) for i in [0, n). Each index is visited exactly once; callers
// must only write to storage owned by their index.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace vip3de
