#include "vip3de/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vip3de {

size_t CorrespondenceMap::mapped_count() const {
    return static_cast<size_t>(std::count_if(target.begin(), target.end(), [](int t) { return t != kNone; }));
}

CorrespondenceMap CorrespondenceMap::empty(int frames, int image_height, int image_width, int factor) {
    if (factor < 1 || image_height % factor != 0 || image_width % factor != 0) {
        throw InvalidArgument("correspondence: factor must divide the image size");
    }
    CorrespondenceMap map;
    map.frames = frames;
    map.image_height = image_height;
    map.image_width = image_width;
    map.factor = factor;
    map.latent_height = image_height / factor;
    map.latent_width = image_width / factor;
    map.target.assign(static_cast<size_t>(frames) * map.cells_per_frame(), kNone);
    return map;
}

void CorrespondenceMap::validate() const {
    if (target.size() != static_cast<size_t>(frames) * cells_per_frame()) {
        throw InvalidArgument("correspondence: storage does not match dimensions");
    }
    const int cells = static_cast<int>(cells_per_frame());
    for (size_t i = 0; i < cells_per_frame() && frames > 0; ++i) {
        if (target[i] != kNone) throw InvalidArgument("correspondence: reference frame must be unmapped");
    }
    for (int t : target) {
        if (t != kNone && (t < 0 || t >= cells)) throw InvalidArgument("correspondence: target out of bounds");
    }
}

Projection project_pixel(const Camera& from, const Camera& to, double u, double v, double depth) {
    if (!std::isfinite(depth) || !(depth > 0.0)) throw InvalidArgument("no surface");
    const Vec3 cam_from = depth * (from.K.inverse() * Vec3(u, v, 1.0));
    const Vec3 world = from.R.transpose() * (cam_from - from.t);
    const Vec3 cam_to = to.R * world + to.t;
    Projection p;
    p.depth = cam_to.z();
    if (!(p.depth > 0.0)) return p;
    const Vec3 img = to.K * cam_to;
    p.u = img.x() / p.depth;
    p.v = img.y() / p.depth;
    const int x = nearest_pixel(p.u);
    const int y = nearest_pixel(p.v);
    p.in_frustum = x >= 0 && x < to.width && y >= 0 && y < to.height;
    return p;
}

CorrespondenceMap build_correspondence(const std::vector<DepthMap>& depths, const std::vector<Camera>& cameras,
                                       double tau, int factor) {
    if (!(tau > 0.0)) throw InvalidArgument("correspondence: tau must be positive");
    if (depths.empty() || depths.size() != cameras.size()) {
        throw InvalidArgument("correspondence: need one depth map per camera");
    }
    const int h = depths[0].height;
    const int w = depths[0].width;
    for (size_t i = 0; i < depths.size(); ++i) {
        if (depths[i].width != w || depths[i].height != h || cameras[i].width != w || cameras[i].height != h) {
            throw InvalidArgument("correspondence: all frames must share dimensions");
        }
        cameras[i].validate();
    }
    CorrespondenceMap map = CorrespondenceMap::empty(static_cast<int>(depths.size()), h, w, factor);
    const DepthMap& ref_depth = depths[0];
    const Camera& ref_cam = cameras[0];

    parallel_for(depths.size() - 1, [&](size_t k) {
        const int i = static_cast<int>(k) + 1;
        for (int row = 0; row < map.latent_height; ++row) {
            for (int col = 0; col < map.latent_width; ++col) {
                const int px = col * factor + factor / 2;
                const int py = row * factor + factor / 2;
                const double d = depths[static_cast<size_t>(i)].at(px, py);
                if (!std::isfinite(d)) continue;
                const Projection p = project_pixel(cameras[static_cast<size_t>(i)], ref_cam, px, py, d);
                if (!p.in_frustum) continue;
                const int rx = nearest_pixel(p.u);
                const int ry = nearest_pixel(p.v);
                const double rendered = ref_depth.at(rx, ry);
                if (!(std::abs(p.depth - rendered) < tau)) continue;
                const int tcol = static_cast<int>(std::floor((p.u + 0.5) / factor));
                const int trow = static_cast<int>(std::floor((p.v + 0.5) / factor));
                map.at(i, row, col) = trow * map.latent_width + tcol;
            }
        }
    });
    return map;
}

CorrespondenceMap build_correspondence(const std::vector<RenderedFrame>& frames,
                                       const std::vector<Camera>& cameras, double tau, int factor) {
    std::vector<DepthMap> depths;
    depths.reserve(frames.size());
    for (const auto& f : frames) depths.push_back(f.depth);
    return build_correspondence(depths, cameras, tau, factor);
}

LatentVideo override_latent(const LatentVideo& x, const CorrespondenceMap& map) {
    if (x.frames != map.frames || x.height != map.latent_height || x.width != map.latent_width) {
        throw InvalidArgument("override_latent: latent shape does not match correspondence map");
    }
    LatentVideo out = x;
    const size_t plane = static_cast<size_t>(x.height) * x.width;
    parallel_for(x.frames > 0 ? static_cast<size_t>(x.frames - 1) : 0, [&](size_t k) {
        const int i = static_cast<int>(k) + 1;
        for (size_t cell = 0; cell < plane; ++cell) {
            const int t = map.target[static_cast<size_t>(i) * plane + cell];
            if (t == CorrespondenceMap::kNone) continue;
            for (int c = 0; c < x.channels; ++c) {
                out.data[(static_cast<size_t>(i) * x.channels + c) * plane + cell] =
                    x.data[static_cast<size_t>(c) * plane + static_cast<size_t>(t)];
            }
        }
    });
    return out;
}

void write_correspondence_dump(std::ostream& out, const CorrespondenceMap& map) {
    for (int i = 0; i < map.frames; ++i) {
        out << "frame " << i << '\n';
        for (int row = 0; row < map.latent_height; ++row) {
            for (int col = 0; col < map.latent_width; ++col) {
                if (col > 0) out << ' ';
                const int t = map.at(i, row, col);
                if (t == CorrespondenceMap::kNone) {
                    out << '.';
                } else {
                    out << col << ',' << row << "->" << (t % map.latent_width) << ',' << (t / map.latent_width);
                }
            }
            out << '\n';
        }
    }
}

}  // namespace vip3de
