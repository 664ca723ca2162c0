#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "vip3de/demo.hpp"
#include "vip3de/io.hpp"
#include "vip3de/metrics.hpp"

using namespace vip3de;
using json = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> sets;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

std::string frame_name(const std::string& stem, size_t i, const std::string& ext) {
    std::ostringstream s;
    s << stem << '_' << std::setw(3) << std::setfill('0') << i << ext;
    return s.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

RunSettings settings_from(const Common& c, RunSettings base = {}) {
    RunSettings s = c.config_path.empty() ? std::move(base) : load_config(c.config_path, std::move(base));
    for (const auto& kv : c.sets) {
        auto [k, v] = split_assignment(kv);
        apply_setting(s, k, v);
    }
    if (c.seed) s.config.seed = *c.seed;
    s.config.validate();
    make_editor(s.spec);
    return s;
}

std::vector<EditMask> read_masks(const std::string& dir, size_t count) {
    std::vector<EditMask> masks;
    if (dir.empty()) return masks;
    for (size_t i = 0; i < count; ++i) masks.push_back(read_mask_png(fs::path(dir) / frame_name("mask", i, ".png")));
    return masks;
}

json config_json(const EditConfig& c, const EditSpec& spec) {
    json j;
    j["eta"] = c.eta;
    j["tau"] = c.tau;
    j["w_min"] = c.w_min;
    j["w_max"] = c.w_max;
    j["steps"] = c.steps;
    j["factor"] = c.factor;
    j["update_iters"] = c.update_iters;
    j["lr"] = c.lr;
    j["seed"] = c.seed;
    j["sigma_data"] = c.sigma_data;
    j["context_len"] = c.context_len;
    j["overriding"] = c.overriding;
    j["denoiser"] = c.denoiser;
    j["editor"] = spec.editor;
    j["editor_params"] = spec.params;
    return j;
}

json run_summary(const PipelineResult& r, const EditConfig& c, const EditSpec& spec) {
    json j;
    j["config"] = config_json(c, spec);
    j["frames"] = r.edited_frames.size();
    j["condition_index"] = r.condition_index;
    const auto& k = r.counters;
    j["counters"] = {{"render_count", k.render},         {"condition_count", k.condition},
                     {"encode_count", k.encode},         {"invert_count", k.invert},
                     {"blend_count", k.blend},           {"correspondence_count", k.correspondence},
                     {"sample_count", k.sample},         {"sample_segments", k.sample_segments},
                     {"decode_count", k.decode},         {"update_count", k.update}};
    j["latent_distance_to_target"] = mean_abs_distance(r.edited_latent, r.target_latent);
    if (!r.update_loss.empty()) {
        j["update_loss_first"] = r.update_loss.front();
        j["update_loss_last"] = r.update_loss.back();
    }
    j["timings_ms"] = r.timings_ms;
    return j;
}

json write_frames(const fs::path& dir, const std::vector<RenderedFrame>& frames, bool depth) {
    json list = json::array();
    for (size_t i = 0; i < frames.size(); ++i) {
        json e;
        e["index"] = i;
        e["rgb"] = frame_name("frame", i, ".png");
        write_png(dir / e["rgb"].get<std::string>(), frames[i].rgb);
        if (depth) {
            e["depth"] = frame_name("depth", i, ".bin");
            write_depth(dir / e["depth"].get<std::string>(), frames[i].depth);
        }
        list.push_back(e);
    }
    return list;
}

json write_images(const fs::path& dir, const std::vector<Image>& frames, const std::string& stem) {
    json list = json::array();
    for (size_t i = 0; i < frames.size(); ++i) {
        const std::string name = frame_name(stem, i, ".png");
        write_png(dir / name, frames[i]);
        list.push_back(name);
    }
    return list;
}

int cmd_render(const Common& c, const std::string& scene_path, const std::string& cams_path) {
    const PointScene scene = read_scene(scene_path);
    const CameraPath traj = read_trajectory(cams_path);
    traj.validate();
    const auto frames = render_all(scene, traj.cameras);
    const fs::path out(c.out);
    json m;
    m["command"] = "render";
    m["scene"] = scene_path;
    m["cameras"] = cams_path;
    m["count"] = frames.size();
    m["width"] = traj.cameras[0].width;
    m["height"] = traj.cameras[0].height;
    m["depth_format"] = "float32 little-endian row-major, +inf where empty";
    m["frames"] = write_frames(out, frames, true);
    write_cameras(out / "cameras.txt", traj.cameras);
    write_json(out / "manifest.json", m);
    return 0;
}

int cmd_trajectory(const Common& c, const std::string& cams_path, int keys, int frames, double radius,
                   const std::string& scene_path, bool jitter) {
    const std::vector<Camera> training = read_cameras(cams_path);
    if (training.size() < 2) throw InvalidArgument("trajectory too short");
    if (!scene_path.empty()) {
        const PointScene scene = read_scene(scene_path);
        Vec3 mean = Vec3::Zero();
        for (const auto& p : scene.points) mean += p.position;
        mean /= static_cast<double>(std::max<size_t>(1, scene.size()));
        radius = 0.0;
        for (const auto& p : scene.points) radius = std::max(radius, (p.position - mean).norm());
        if (radius <= 0.0) radius = 1.0;
    }
    TrajectoryOptions opts;
    opts.jitter_keys = jitter;
    opts.seed = c.seed.value_or(0);
    if (keys <= 0) keys = static_cast<int>(training.size());
    const CameraPath path = build_trajectory(training, keys, frames, radius, opts);
    const fs::path out(c.out);
    write_trajectory(out / "trajectory.txt", path);
    json m;
    m["command"] = "trajectory";
    m["training"] = cams_path;
    m["frames"] = path.size();
    m["keys"] = path.key_indices;
    m["scene_radius"] = radius;
    m["path_length"] = path_length(path.cameras, radius);
    write_json(out / "manifest.json", m);
    return 0;
}

void write_edit_outputs(const fs::path& out, const PipelineResult& r, const EditConfig& cfg, const EditSpec& spec,
                        const std::string& scene_src, const std::string& traj_src, const CameraPath& traj) {
    json m;
    m["command"] = "edit";
    m["scene"] = scene_src;
    m["trajectory"] = traj_src;
    m["source"] = write_images(out / "source", [&] {
        std::vector<Image> v;
        for (const auto& f : r.source_frames) v.push_back(f.rgb);
        return v;
    }(), "frame");
    m["edited"] = write_images(out / "edited", r.edited_frames, "frame");
    write_png(out / "condition.png", r.condition_frame);
    write_scene(out / "edited_scene.txt", r.scene);
    const auto updated = render_all(r.scene, traj.cameras);
    std::vector<Image> rerendered;
    for (const auto& f : updated) rerendered.push_back(f.rgb);
    m["updated"] = write_images(out / "updated", rerendered, "frame");
    m["edited_scene"] = "edited_scene.txt";
    m["condition"] = "condition.png";
    write_json(out / "manifest.json", m);

    json s = run_summary(r, cfg, spec);
    std::vector<DepthMap> depths;
    for (const auto& f : r.source_frames) depths.push_back(f.depth);
    std::vector<Image> src;
    for (const auto& f : r.source_frames) src.push_back(f.rgb);
    try {
        s["reprojection_source"] = reprojection_consistency(src, depths, traj.cameras, cfg.tau);
        s["reprojection_edited"] = reprojection_consistency(r.edited_frames, depths, traj.cameras, cfg.tau);
    } catch (const InvalidArgument&) {
        s["reprojection_source"] = nullptr;
        s["reprojection_edited"] = nullptr;
    }
    write_json(out / "summary.json", s);
}

int cmd_edit(const Common& c, const std::string& scene_path, const std::string& traj_path, const std::string& masks) {
    RunSettings s = settings_from(c);
    const PointScene scene = read_scene(scene_path);
    const CameraPath traj = read_trajectory(traj_path);
    traj.validate();
    s.spec.masks = read_masks(masks, traj.size());
    const auto editor = make_editor(s.spec);
    const PipelineResult r =
        run_vip3de(scene, traj, *editor, s.spec, s.config, denoiser_provider(s.config.denoiser));
    write_edit_outputs(c.out, r, s.config, s.spec, scene_path, traj_path, traj);
    return 0;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            v.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw InvalidArgument("not a number: " + item);
        }
    }
    return v;
}

int cmd_sweep(const Common& c, const std::string& scene_path, const std::string& traj_path, const std::string& etas,
              int seeds) {
    RunSettings s = settings_from(c);
    const auto eta_list = parse_doubles(etas);
    if (eta_list.size() < 2) throw InvalidArgument("sweep needs at least two eta values");
    for (double e : eta_list) {
        if (!(e >= 0.0 && e <= 1.0)) throw InvalidArgument("eta out of range");
    }
    if (seeds < 1) throw InvalidArgument("sweep needs at least one seed");
    const PointScene scene = read_scene(scene_path);
    const CameraPath traj = read_trajectory(traj_path);
    traj.validate();
    const auto editor = make_editor(s.spec);
    std::vector<std::uint64_t> seed_list;
    for (int i = 0; i < seeds; ++i) seed_list.push_back(s.config.seed + static_cast<std::uint64_t>(i));
    const auto rows =
        eta_sweep(scene, traj, *editor, s.spec, s.config, denoiser_provider(s.config.denoiser), eta_list, seed_list);
    const fs::path out(c.out);
    std::ostringstream csv;
    write_sweep_csv(csv, rows);
    write_text(out / "sweep.csv", csv.str());
    write_png(out / "sweep.png", plot_sweep(rows));
    json j;
    j["command"] = "sweep";
    j["config"] = config_json(s.config, s.spec);
    j["seeds"] = seed_list;
    json means = json::array();
    for (const auto& m : average_over_seeds(rows)) {
        means.push_back({{"eta", m.eta}, {"pose_err", m.pose_err}, {"appearance_dist", m.appearance_dist}});
    }
    j["seed_averaged"] = means;
    j["table"] = "sweep.csv";
    j["plot"] = "sweep.png";
    write_json(out / "summary.json", j);
    return 0;
}

int cmd_eval(const Common& c, const std::string& gt, const std::string& est, const std::string& frames_dir,
             const std::string& cams, double tau) {
    if (gt.empty() == !est.empty()) throw InvalidArgument("--gt and --est go together");
    if (frames_dir.empty() == !cams.empty()) throw InvalidArgument("--frames and --cameras go together");
    if (gt.empty() && frames_dir.empty()) throw InvalidArgument("nothing to evaluate: give --gt/--est or --frames/--cameras");
    json j;
    j["command"] = "eval";
    if (!gt.empty()) {
        const auto a = poses_from_cameras(read_trajectory(gt).cameras);
        const auto b = poses_from_cameras(read_trajectory(est).cameras);
        j["trans_err"] = trans_err(a, b);
        j["rotation_err_rad"] = rotation_err(a, b);
    }
    if (!frames_dir.empty()) {
        const CameraPath traj = read_trajectory(cams);
        const fs::path dir(frames_dir);
        std::vector<Image> frames;
        std::vector<DepthMap> depths;
        for (size_t i = 0; i < traj.size(); ++i) {
            frames.push_back(read_png(dir / frame_name("frame", i, ".png")));
            depths.push_back(read_depth(dir / frame_name("depth", i, ".bin"), traj.cameras[i].width,
                                        traj.cameras[i].height));
        }
        j["reprojection_consistency"] = reprojection_consistency(frames, depths, traj.cameras, tau);
    }
    const std::string text = j.dump(2) + "\n";
    std::cout << text;
    if (!c.out.empty()) write_text(fs::path(c.out) / "eval.json", text);
    return 0;
}

int cmd_demo(const Common& c, int size) {
    // Demo defaults: a finer codec and a sharper analytic model than the
    // generic defaults, so the worked example converges visibly.
    RunSettings base;
    base.spec.editor = "recolor";
    base.config.factor = 4;
    base.config.sigma_data = 0.02;
    RunSettings s = settings_from(c, base);
    DemoOptions o;
    o.image_size = size;
    o.seed = s.config.seed;
    const DemoData d = make_demo(o);
    const fs::path out(c.out);
    write_scene(out / "scene.txt", d.scene);
    write_cameras(out / "training_cameras.txt", d.training);
    write_trajectory(out / "trajectory.txt", d.trajectory);
    const auto editor = make_editor(s.spec);
    const PipelineResult r =
        run_vip3de(d.scene, d.trajectory, *editor, s.spec, s.config, denoiser_provider(s.config.denoiser));
    write_edit_outputs(out, r, s.config, s.spec, "scene.txt", "trajectory.txt", d.trajectory);
    const PointScene oracle = oracle_edit_scene(d.scene, *editor, nullptr, nullptr);
    std::vector<bool> seen(d.scene.size(), false);
    for (const auto& f : r.source_frames) {
        for (int idx : f.point_index) {
            if (idx >= 0) seen[static_cast<size_t>(idx)] = true;
        }
    }
    double err = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) continue;
        err += (r.scene.points[i].color - oracle.points[i].color).cwiseAbs().mean();
        ++count;
    }
    std::ifstream in(out / "summary.json");
    json s_json = json::parse(in);
    in.close();
    s_json["visible_points"] = count;
    s_json["color_error_vs_oracle"] = count ? err / static_cast<double>(count) : 0.0;
    write_json(out / "summary.json", s_json);
    std::cout << "demo: " << r.edited_frames.size() << " frames, condition frame " << r.condition_index
              << ", color error vs oracle " << s_json["color_error_vs_oracle"].get<double>() << "\n";
    return 0;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config_path, "key = value config file");
    sub->add_option("--set", c.sets, "override, key=value (repeatable)");
    sub->add_option("--out", c.out, "output directory");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker cap, 0 = all cores");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vip3de: multi-view 3D editing over point scenes"};
    app.require_subcommand(1, 1);
    Common common;

    std::string scene, cams, traj, masks, etas = "0,0.25,0.5,0.75,1", gt, est, frames_dir;
    int keys = 0, frames = 25, seeds = 3, size = 128;
    double radius = 1.0, tau = 0.5;
    bool jitter = false;

    auto* render = app.add_subcommand("render", "render a scene along cameras");
    render->add_option("--scene", scene, "scene file")->required();
    render->add_option("--cameras", cams, "camera or trajectory file")->required();

    auto* trajectory = app.add_subcommand("trajectory", "sort and interpolate training cameras");
    trajectory->add_option("--cameras", cams, "training camera file")->required();
    trajectory->add_option("--keys", keys, "key views (default: all)");
    trajectory->add_option("--frames", frames, "frames in the trajectory");
    trajectory->add_option("--radius", radius, "scene radius");
    trajectory->add_option("--scene", scene, "take the radius from this scene");
    trajectory->add_flag("--jitter", jitter, "jitter interior keys");

    auto* edit = app.add_subcommand("edit", "edit a scene in one forward pass");
    edit->add_option("--scene", scene, "scene file")->required();
    edit->add_option("--trajectory", traj, "trajectory file")->required();
    edit->add_option("--masks", masks, "directory of mask_NNN.png");

    auto* sweep = app.add_subcommand("sweep", "eta sweep table and plot");
    sweep->add_option("--scene", scene, "scene file")->required();
    sweep->add_option("--trajectory", traj, "trajectory file")->required();
    sweep->add_option("--etas", etas, "comma-separated eta values");
    sweep->add_option("--seeds", seeds, "seeds per eta, counting up from --seed");

    auto* eval = app.add_subcommand("eval", "pose and consistency metrics");
    eval->add_option("--gt", gt, "ground-truth cameras");
    eval->add_option("--est", est, "estimated cameras");
    eval->add_option("--frames", frames_dir, "directory with frame_NNN.png and depth_NNN.bin");
    eval->add_option("--cameras", cams, "cameras for --frames");
    eval->add_option("--tau", tau, "depth tolerance");

    auto* demo = app.add_subcommand("demo", "built-in textured cube, end to end");
    demo->add_option("--size", size, "image size");

    for (auto* sub : {render, trajectory, edit, sweep, eval, demo}) add_common(sub, common);
    bool eval_out_given = false;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    eval_out_given = eval->count("--out") > 0;

    try {
        set_thread_count(common.threads);
        if (*render) return cmd_render(common, scene, cams);
        if (*trajectory) return cmd_trajectory(common, cams, keys, frames, radius, scene, jitter);
        if (*edit) return cmd_edit(common, scene, traj, masks);
        if (*sweep) return cmd_sweep(common, scene, traj, etas, seeds);
        if (*eval) {
            Common c = common;
            if (!eval_out_given) c.out.clear();
            return cmd_eval(c, gt, est, frames_dir, cams, tau);
        }
        if (*demo) return cmd_demo(common, size);
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.invalid_argument() ? 2 : 3;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
