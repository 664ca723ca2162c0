#pragma once

#include <cmath>
#include <optional>
#include <ostream>
#include <vector>

#include "vip3de/camera.hpp"
#include "vip3de/latent.hpp"
#include "vip3de/scene.hpp"

namespace vip3de {

// Cross-view correspondence into the first (reference) frame at latent
// resolution. Entries are flat row-major cell indices into the reference
// frame's latent grid, or kNone.
struct CorrespondenceMap {
    static constexpr int kNone = -1;

    int frames = 0;
    int latent_height = 0;
    int latent_width = 0;
    int image_height = 0;
    int image_width = 0;
    int factor = 1;
    std::vector<int> target;

    size_t cells_per_frame() const { return static_cast<size_t>(latent_height) * latent_width; }
    int& at(int frame, int row, int col) {
        return target[static_cast<size_t>(frame) * cells_per_frame() + static_cast<size_t>(row) * latent_width + col];
    }
    int at(int frame, int row, int col) const {
        return target[static_cast<size_t>(frame) * cells_per_frame() + static_cast<size_t>(row) * latent_width + col];
    }
    size_t mapped_count() const;

    // An all-empty map.
    static CorrespondenceMap empty(int frames, int image_height, int image_width, int factor);

    void validate() const;
};

struct Projection {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
    bool in_frustum = false;
};

// Lifts pixel (u, v) of `from` at the given depth into 3D and projects it into
// `to`. in_frustum is false when the point lands behind `to` or outside its
// image (after nearest-pixel rounding).
Projection project_pixel(const Camera& from, const Camera& to, double u, double v, double depth);

// Nearest-pixel index for continuous coordinate c.
inline int nearest_pixel(double c) { return static_cast<int>(std::floor(c + 0.5)); }

// Builds the map from every frame i >= 1 into frame 0. Each latent cell is
// represented by its center pixel (col * factor + factor / 2, likewise rows)
// and that pixel's depth; the projection survives when frame 0's rendered
// depth at the nearest pixel is within tau of the projected depth. The target
// is the latent cell containing that pixel.
CorrespondenceMap build_correspondence(const std::vector<DepthMap>& depths, const std::vector<Camera>& cameras,
                                       double tau, int factor);
CorrespondenceMap build_correspondence(const std::vector<RenderedFrame>& frames,
                                       const std::vector<Camera>& cameras, double tau, int factor);

// Copy of x where every mapped cell of frames >= 1 takes all channels of frame 0 at its target.
LatentVideo override_latent(const LatentVideo& x, const CorrespondenceMap& map);

// Debug dump: one block per frame, one line per latent row, entries "u,v->u',v'" or ".".
void write_correspondence_dump(std::ostream& out, const CorrespondenceMap& map);

}  // namespace vip3de
