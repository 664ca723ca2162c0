#include "vip3de/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

namespace vip3de {

void PoseSequence::validate() const {
    if (rotations.size() != translations.size()) throw InvalidArgument("pose sequence: size mismatch");
    for (const auto& r : rotations) {
        if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || r.determinant() <= 0.0) {
            throw InvalidArgument("pose sequence: rotation is not orthonormal with det +1");
        }
    }
}

PoseSequence poses_from_cameras(const std::vector<Camera>& cameras) {
    PoseSequence p;
    for (const auto& c : cameras) {
        p.rotations.push_back(c.R.transpose());
        p.translations.push_back(c.center());
    }
    return p;
}

PoseSequence align_to_first(const PoseSequence& poses) {
    if (poses.size() == 0) throw InvalidArgument("align_to_first: empty sequence");
    PoseSequence out;
    const Mat3 r0t = poses.rotations[0].transpose();
    const Vec3 t0 = poses.translations[0];
    for (size_t j = 0; j < poses.size(); ++j) {
        if (j == 0) {
            out.rotations.push_back(Mat3::Identity());
            out.translations.push_back(Vec3::Zero());
            continue;
        }
        out.rotations.push_back(r0t * poses.rotations[j]);
        out.translations.push_back(r0t * (poses.translations[j] - t0));
    }
    return out;
}

double trans_err(const PoseSequence& gt, const PoseSequence& est) {
    if (gt.size() != est.size()) throw InvalidArgument("trans_err: sequences differ in length");
    if (gt.size() == 0) return 0.0;
    const PoseSequence a = align_to_first(gt);
    const PoseSequence b = align_to_first(est);
    double sum = 0.0;
    for (size_t j = 0; j < a.size(); ++j) sum += (a.translations[j] - b.translations[j]).norm();
    return sum;
}

double rotation_err(const PoseSequence& gt, const PoseSequence& est) {
    if (gt.size() != est.size()) throw InvalidArgument("rotation_err: sequences differ in length");
    if (gt.size() == 0) return 0.0;
    const PoseSequence a = align_to_first(gt);
    const PoseSequence b = align_to_first(est);
    double sum = 0.0;
    for (size_t j = 0; j < a.size(); ++j) {
        const double c = std::clamp(((a.rotations[j].transpose() * b.rotations[j]).trace() - 1.0) / 2.0, -1.0, 1.0);
        sum += std::acos(c);
    }
    return sum / static_cast<double>(a.size());
}

double reprojection_consistency(const std::vector<Image>& frames, const std::vector<DepthMap>& depths,
                                const std::vector<Camera>& cameras, double tau) {
    if (frames.size() != depths.size() || frames.size() != cameras.size()) {
        throw InvalidArgument("reprojection_consistency: frames, depths and cameras differ in count");
    }
    if (frames.size() < 2) throw InvalidArgument("reprojection_consistency: need at least two frames");
    for (size_t i = 0; i < frames.size(); ++i) {
        if (frames[i].width != depths[i].width || frames[i].height != depths[i].height) {
            throw InvalidArgument("reprojection_consistency: frame and depth sizes differ");
        }
    }
    const CorrespondenceMap map = build_correspondence(depths, cameras, tau, 1);
    const Image& ref = frames[0];
    double sum = 0.0;
    size_t count = 0;
    for (int i = 1; i < map.frames; ++i) {
        const Image& f = frames[static_cast<size_t>(i)];
        for (int y = 0; y < map.latent_height; ++y) {
            for (int x = 0; x < map.latent_width; ++x) {
                const int t = map.at(i, y, x);
                if (t == CorrespondenceMap::kNone) continue;
                const int tx = t % map.latent_width;
                const int ty = t / map.latent_width;
                double d = 0.0;
                for (int c = 0; c < f.channels; ++c) d += std::abs(f.at(x, y, c) - ref.at(tx, ty, c));
                sum += d / f.channels;
                ++count;
            }
        }
    }
    if (count == 0) throw InvalidArgument("disjoint views");
    return sum / static_cast<double>(count);
}

std::vector<SweepRow> eta_sweep(const PointScene& scene, const CameraPath& trajectory, const ToyEditor& editor,
                                const EditSpec& spec, const EditConfig& config, const DenoiserProvider& provider,
                                const std::vector<double>& etas, const std::vector<std::uint64_t>& seeds,
                                const RenderOptions& render) {
    if (etas.empty() || seeds.empty()) throw InvalidArgument("eta_sweep: need at least one eta and one seed");
    std::vector<SweepRow> rows(etas.size() * seeds.size());
    for (size_t e = 0; e < etas.size(); ++e) {
        for (size_t s = 0; s < seeds.size(); ++s) rows[e * seeds.size() + s] = {etas[e], seeds[s], 0.0, 0.0};
    }
    for (auto& row : rows) {
        EditConfig c = config;
        c.eta = row.eta;
        c.seed = row.seed;
        c.validate();
    }
    PipelineOptions options;
    options.render = render;
    options.skip_update = true;
    parallel_for(rows.size(), [&](size_t i) {
        EditConfig c = config;
        c.eta = rows[i].eta;
        c.seed = rows[i].seed;
        const PipelineResult r = run_vip3de(scene, trajectory, editor, spec, c, provider, options);
        std::vector<DepthMap> depths;
        for (const auto& f : r.source_frames) depths.push_back(f.depth);
        rows[i].pose_err = reprojection_consistency(r.edited_frames, depths, trajectory.cameras, c.tau);
        rows[i].appearance_dist = mean_abs_distance(r.edited_latent, r.target_latent);
    });
    return rows;
}

std::vector<SweepMean> average_over_seeds(const std::vector<SweepRow>& rows) {
    std::vector<SweepMean> means;
    std::vector<int> counts;
    for (const auto& r : rows) {
        auto it = std::find_if(means.begin(), means.end(), [&](const SweepMean& m) { return m.eta == r.eta; });
        if (it == means.end()) {
            means.push_back({r.eta, 0.0, 0.0});
            counts.push_back(0);
            it = means.end() - 1;
        }
        it->pose_err += r.pose_err;
        it->appearance_dist += r.appearance_dist;
        ++counts[static_cast<size_t>(it - means.begin())];
    }
    for (size_t i = 0; i < means.size(); ++i) {
        means[i].pose_err /= counts[i];
        means[i].appearance_dist /= counts[i];
    }
    return means;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "eta,seed,pose_err,appearance_dist\n" << std::setprecision(9);
    for (const auto& r : rows) out << r.eta << ',' << r.seed << ',' << r.pose_err << ',' << r.appearance_dist << "\n";
}

namespace {

void draw_line(Image& img, double x0, double y0, double x1, double y1, const Vec3& color) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int s = 0; s <= steps; ++s) {
        const double a = static_cast<double>(s) / steps;
        const int x = static_cast<int>(std::lround(x0 + a * (x1 - x0)));
        const int y = static_cast<int>(std::lround(y0 + a * (y1 - y0)));
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int px = x + dx;
                const int py = y + dy;
                if (px < 0 || py < 0 || px >= img.width || py >= img.height) continue;
                for (int c = 0; c < 3; ++c) img.at(px, py, c) = color[c];
            }
        }
    }
}

}  // namespace

Image plot_sweep(const std::vector<SweepRow>& rows, int width, int height) {
    if (width < 64 || height < 64) throw InvalidArgument("plot_sweep: image too small");
    Image img(width, height, 3, 1.0);
    const double left = 40, right = width - 20.0, top = 20, bottom = height - 40.0;
    const Vec3 axis(0.2, 0.2, 0.2);
    draw_line(img, left, bottom, right, bottom, axis);
    draw_line(img, left, bottom, left, top, axis);
    auto means = average_over_seeds(rows);
    if (means.empty()) return img;
    std::sort(means.begin(), means.end(), [](const SweepMean& a, const SweepMean& b) { return a.eta < b.eta; });
    const double e0 = means.front().eta;
    const double e1 = means.back().eta;
    auto series = [&](auto get, const Vec3& color) {
        double lo = get(means[0]), hi = lo;
        for (const auto& m : means) {
            lo = std::min(lo, get(m));
            hi = std::max(hi, get(m));
        }
        auto px = [&](const SweepMean& m) { return e1 > e0 ? left + (m.eta - e0) / (e1 - e0) * (right - left) : left; };
        auto py = [&](const SweepMean& m) {
            return hi > lo ? bottom - (get(m) - lo) / (hi - lo) * (bottom - top) : 0.5 * (top + bottom);
        };
        for (size_t i = 0; i + 1 < means.size(); ++i) {
            draw_line(img, px(means[i]), py(means[i]), px(means[i + 1]), py(means[i + 1]), color);
        }
        if (means.size() == 1) draw_line(img, px(means[0]), py(means[0]), px(means[0]), py(means[0]), color);
    };
    series([](const SweepMean& m) { return m.pose_err; }, Vec3(0.1, 0.3, 0.9));
    series([](const SweepMean& m) { return m.appearance_dist; }, Vec3(0.9, 0.2, 0.1));
    return img;
}

}  // namespace vip3de
