#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "vip3de/demo.hpp"
#include "vip3de/io.hpp"
#include "vip3de/metrics.hpp"

namespace py = pybind11;
using namespace vip3de;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& data, std::vector<py::ssize_t> shape) {
    Array a(shape);
    std::copy(data.begin(), data.end(), a.mutable_data());
    return a;
}

std::vector<double> flat(const Array& a) { return {a.data(), a.data() + a.size()}; }

void require(bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
}

Array image_to_array(const Image& im) { return to_array(im.data, {im.height, im.width, im.channels}); }

Image image_from(const Array& a) {
    require(a.ndim() == 3 || a.ndim() == 2, "image must be H x W or H x W x C");
    Image im(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1);
    im.data = flat(a);
    return im;
}

Array depth_to_array(const DepthMap& d) { return to_array(d.data, {d.height, d.width}); }

DepthMap depth_from(const Array& a) {
    require(a.ndim() == 2, "depth must be H x W");
    DepthMap d(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    d.data = flat(a);
    return d;
}

Array latent_to_array(const LatentVideo& x) { return to_array(x.data, {x.frames, x.channels, x.height, x.width}); }

LatentVideo latent_from(const Array& a) {
    require(a.ndim() == 4, "latent must be N x C x H x W");
    LatentVideo x(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                  static_cast<int>(a.shape(3)));
    x.data = flat(a);
    return x;
}

EditMask mask_from(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    require(a.ndim() == 2, "mask must be H x W");
    EditMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.size(); ++i) m.data[static_cast<size_t>(i)] = a.data()[i] != 0;
    return m;
}

PointScene scene_from(const Array& positions, const Array& colors, const Array& radii) {
    require(positions.ndim() == 2 && positions.shape(1) == 3, "positions must be N x 3");
    require(colors.ndim() == 2 && colors.shape(1) == 3 && colors.shape(0) == positions.shape(0),
            "colors must be N x 3");
    require(radii.ndim() == 1 && radii.shape(0) == positions.shape(0), "radii must have N entries");
    PointScene s;
    s.points.resize(static_cast<size_t>(positions.shape(0)));
    for (size_t i = 0; i < s.points.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            s.points[i].position[k] = positions.at(i, k);
            s.points[i].color[k] = colors.at(i, k);
        }
        s.points[i].radius = radii.at(i);
    }
    s.validate();
    return s;
}

Array scene_column(const PointScene& s, int which) {
    std::vector<double> v;
    for (const auto& p : s.points) {
        if (which == 2) {
            v.push_back(p.radius);
            continue;
        }
        const Vec3& x = which == 0 ? p.position : p.color;
        v.insert(v.end(), {x.x(), x.y(), x.z()});
    }
    if (which == 2) return to_array(v, {static_cast<py::ssize_t>(s.size())});
    return to_array(v, {static_cast<py::ssize_t>(s.size()), 3});
}

Quat quat_from(const Array& a) {
    require(a.ndim() == 1 && a.shape(0) == 4, "quaternion must be (w, x, y, z)");
    return Quat(a.at(0), a.at(1), a.at(2), a.at(3));
}

Array quat_to_array(const Quat& q) { return to_array({q.w(), q.x(), q.y(), q.z()}, {4}); }

// Settings go through the same key = value parser as config files.
RunSettings settings_from(const py::dict& settings) {
    RunSettings s;
    for (const auto& [k, v] : settings) {
        std::string value;
        if (py::isinstance<py::bool_>(v)) {
            value = v.cast<bool>() ? "true" : "false";
        } else {
            value = py::str(v);
        }
        apply_setting(s, py::str(k), value);
    }
    s.config.validate();
    return s;
}

py::dict counters_dict(const StageCounters& k) {
    py::dict d;
    d["render_count"] = k.render;
    d["condition_count"] = k.condition;
    d["encode_count"] = k.encode;
    d["invert_count"] = k.invert;
    d["blend_count"] = k.blend;
    d["correspondence_count"] = k.correspondence;
    d["sample_count"] = k.sample;
    d["decode_count"] = k.decode;
    d["update_count"] = k.update;
    d["sample_segments"] = k.sample_segments;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Geometry-aware video diffusion editing of point scenes.";
    m.attr("__version__") = "0.1.0";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);

    m.def("set_thread_count", &set_thread_count, py::arg("n"));
    m.def("thread_count", &thread_count);

    py::class_<Camera>(m, "Camera")
        .def_static("from_intrinsics", &Camera::from_intrinsics, py::arg("fx"), py::arg("fy"), py::arg("cx"),
                    py::arg("cy"), py::arg("width"), py::arg("height"))
        .def_static("look_at", &Camera::look_at, py::arg("eye"), py::arg("target"), py::arg("up"), py::arg("focal"),
                    py::arg("width"), py::arg("height"))
        .def_readwrite("K", &Camera::K)
        .def_readwrite("R", &Camera::R)
        .def_readwrite("t", &Camera::t)
        .def_readwrite("width", &Camera::width)
        .def_readwrite("height", &Camera::height)
        .def("center", &Camera::center)
        .def("axis", &Camera::axis)
        .def("validate", &Camera::validate)
        .def("__repr__", [](const Camera& c) { return "Camera(" + format_camera(c) + ")"; });

    py::class_<PointScene>(m, "PointScene")
        .def(py::init(&scene_from), py::arg("positions"), py::arg("colors"), py::arg("radii"))
        .def("__len__", &PointScene::size)
        .def_property_readonly("positions", [](const PointScene& s) { return scene_column(s, 0); })
        .def_property_readonly("colors", [](const PointScene& s) { return scene_column(s, 1); })
        .def_property_readonly("radii", [](const PointScene& s) { return scene_column(s, 2); });

    py::class_<CameraPath>(m, "CameraPath")
        .def(py::init([](std::vector<Camera> cams, std::vector<int> keys) {
                 CameraPath p{std::move(cams), std::move(keys)};
                 p.validate();
                 return p;
             }),
             py::arg("cameras"), py::arg("key_indices"))
        .def_readonly("cameras", &CameraPath::cameras)
        .def_readonly("key_indices", &CameraPath::key_indices)
        .def("__len__", &CameraPath::size);

    m.def(
        "render",
        [](const PointScene& scene, const Camera& camera, const Vec3& background) {
            RenderOptions o;
            o.background = background;
            const RenderedFrame f = render(scene, camera, o);
            py::array_t<int> index({camera.height, camera.width});
            std::copy(f.point_index.begin(), f.point_index.end(), index.mutable_data());
            return py::make_tuple(image_to_array(f.rgb), depth_to_array(f.depth), index);
        },
        py::arg("scene"), py::arg("camera"), py::arg("background") = Vec3::Constant(0.5),
        "Returns (rgb H x W x 3, depth H x W with inf on misses, winning point index H x W).");

    m.def(
        "make_demo",
        [](int image_size, int grid, int training_views, int key_views, int frames, std::uint64_t seed) {
            DemoOptions o;
            o.image_size = image_size;
            o.grid = grid;
            o.training_views = training_views;
            o.key_views = key_views;
            o.frames = frames;
            o.seed = seed;
            DemoData d = make_demo(o);
            py::dict out;
            out["scene"] = std::move(d.scene);
            out["training"] = std::move(d.training);
            out["trajectory"] = std::move(d.trajectory);
            out["scene_radius"] = d.scene_radius;
            return out;
        },
        py::arg("image_size") = 128, py::arg("grid") = 64, py::arg("training_views") = 8, py::arg("key_views") = 4,
        py::arg("frames") = 25, py::arg("seed") = 0);

    // trajectory
    m.def(
        "slerp", [](const Array& a, const Array& b, double k) { return quat_to_array(slerp(quat_from(a), quat_from(b), k)); },
        py::arg("a"), py::arg("b"), py::arg("k"), "Quaternions are (w, x, y, z).");
    m.def("sort_cameras", &sort_cameras, py::arg("cameras"), py::arg("scene_radius"));
    m.def("interpolate_cameras", &interpolate_cameras, py::arg("a"), py::arg("b"), py::arg("count"));
    m.def("view_change_distance", &view_change_distance, py::arg("a"), py::arg("b"), py::arg("scene_radius"));
    m.def(
        "build_trajectory",
        [](const std::vector<Camera>& training, int key_count, int frames, double radius, bool jitter,
           std::uint64_t seed) { return build_trajectory(training, key_count, frames, radius, {jitter, seed}); },
        py::arg("training"), py::arg("key_count"), py::arg("frames"), py::arg("scene_radius"),
        py::arg("jitter_keys") = false, py::arg("seed") = 0);

    // diffusion
    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("sigmas", &NoiseSchedule::sigmas)
        .def_readonly("sigma_data", &NoiseSchedule::sigma_data)
        .def("steps", &NoiseSchedule::steps)
        .def("sigma", &NoiseSchedule::sigma, py::arg("t"));
    m.def(
        "make_schedule",
        [](int steps, double sigma_min, double sigma_max, double rho, double sigma_data) {
            return make_schedule({steps, sigma_min, sigma_max, rho, sigma_data});
        },
        py::arg("steps") = 25, py::arg("sigma_min") = 0.002, py::arg("sigma_max") = 80.0, py::arg("rho") = 7.0,
        py::arg("sigma_data") = 0.5);

    py::class_<Denoiser, std::shared_ptr<Denoiser>>(m, "Denoiser")
        .def(
            "evaluate",
            [](const Denoiser& d, const Array& x, double sigma) { return latent_to_array(d.evaluate(latent_from(x), sigma, {})); },
            py::arg("x"), py::arg("sigma"));
    py::class_<AnalyticGaussianDenoiser, Denoiser, std::shared_ptr<AnalyticGaussianDenoiser>>(m, "GaussianDenoiser",
                                                                                                "Optimal denoiser for N(mu, sigma_data^2 I) data.")
        .def(py::init([](const Array& mu, double sigma_data) {
                 return std::make_shared<AnalyticGaussianDenoiser>(latent_from(mu), sigma_data);
             }),
             py::arg("mu"), py::arg("sigma_data"));

    m.def(
        "denoise_step",
        [](const Array& x, int t, const NoiseSchedule& s, const Denoiser& d) {
            return latent_to_array(edm_denoise_step(latent_from(x), t, s, d, {}));
        },
        py::arg("x"), py::arg("t"), py::arg("schedule"), py::arg("denoiser"));
    m.def(
        "invert_step",
        [](const Array& x, int t, const NoiseSchedule& s, const Denoiser& d) {
            return latent_to_array(edm_invert_step(latent_from(x), t, s, d, {}));
        },
        py::arg("x"), py::arg("t"), py::arg("schedule"), py::arg("denoiser"));
    m.def(
        "invert",
        [](const Array& x0, const NoiseSchedule& s, const Denoiser& d) {
            py::list out;
            for (const auto& x : invert(latent_from(x0), s, d, {})) out.append(latent_to_array(x));
            return out;
        },
        py::arg("x0"), py::arg("schedule"), py::arg("denoiser"), "Returns [x_1, ..., x_T].");
    m.def(
        "blend_noise",
        [](const Array& x, const Array& eps, double eta) {
            return latent_to_array(blend_noise(latent_from(x), latent_from(eps), eta));
        },
        py::arg("x_T"), py::arg("epsilon"), py::arg("eta"));
    m.def(
        "cfg_combine",
        [](const Array& cond, const Array& uncond, double w_min, double w_max) {
            return latent_to_array(cfg_combine(latent_from(cond), latent_from(uncond), {w_min, w_max}));
        },
        py::arg("cond"), py::arg("uncond"), py::arg("w_min"), py::arg("w_max"));
    m.def(
        "gaussian_noise",
        [](int n, int c, int h, int w, double sigma, std::uint64_t seed) {
            return latent_to_array(gaussian_noise(n, c, h, w, sigma, seed));
        },
        py::arg("frames"), py::arg("channels"), py::arg("height"), py::arg("width"), py::arg("sigma"),
        py::arg("seed"));

    // correspondence
    py::class_<CorrespondenceMap>(m, "CorrespondenceMap")
        .def_readonly("factor", &CorrespondenceMap::factor)
        .def("mapped_count", &CorrespondenceMap::mapped_count)
        .def_property_readonly(
            "target",
            [](const CorrespondenceMap& c) {
                py::array_t<int> a({c.frames, c.latent_height, c.latent_width});
                std::copy(c.target.begin(), c.target.end(), a.mutable_data());
                return a;
            },
            "Frames x rows x cols flat indices into frame 0's latent grid, -1 where unmapped.");
    m.def(
        "build_correspondence",
        [](const std::vector<Array>& depths, const std::vector<Camera>& cams, double tau, int factor) {
            std::vector<DepthMap> d;
            for (const auto& a : depths) d.push_back(depth_from(a));
            return build_correspondence(d, cams, tau, factor);
        },
        py::arg("depths"), py::arg("cameras"), py::arg("tau"), py::arg("factor"));
    m.def(
        "override_latent",
        [](const Array& x, const CorrespondenceMap& map) { return latent_to_array(override_latent(latent_from(x), map)); },
        py::arg("x"), py::arg("map"));
    m.def(
        "sample",
        [](const Array& x_T, const NoiseSchedule& s, const Denoiser& d, double w_min, double w_max,
           const CorrespondenceMap* map) {
            SampleOptions o;
            o.guidance = {w_min, w_max};
            o.correspondence = map;
            return latent_to_array(sample(latent_from(x_T), s, d, {}, o));
        },
        py::arg("x_T"), py::arg("schedule"), py::arg("denoiser"), py::arg("w_min") = 0.0, py::arg("w_max") = 0.0,
        py::arg("correspondence") = nullptr);

    // pipeline
    m.def(
        "encode_image", [](const Array& im, int f) { return latent_to_array(encode_image(image_from(im), f)); },
        py::arg("image"), py::arg("factor"));
    m.def(
        "decode_frame", [](const Array& x, int n, int f) { return image_to_array(decode_frame(latent_from(x), n, f)); },
        py::arg("latent"), py::arg("frame"), py::arg("factor"));

    m.def(
        "run_vip3de",
        [](const PointScene& scene, const CameraPath& trajectory, const py::dict& settings,
           const std::vector<py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>>& masks,
           bool skip_update) {
            RunSettings s = settings_from(settings);
            for (const auto& a : masks) s.spec.masks.push_back(mask_from(a));
            const auto editor = make_editor(s.spec);
            PipelineOptions o;
            o.skip_update = skip_update;
            PipelineResult r;
            {
                py::gil_scoped_release release;
                r = run_vip3de(scene, trajectory, *editor, s.spec, s.config, denoiser_provider(s.config.denoiser), o);
            }
            py::dict out;
            out["scene"] = std::move(r.scene);
            py::list edited, source, depth;
            for (const auto& im : r.edited_frames) edited.append(image_to_array(im));
            for (const auto& f : r.source_frames) {
                source.append(image_to_array(f.rgb));
                depth.append(depth_to_array(f.depth));
            }
            out["edited_frames"] = edited;
            out["source_frames"] = source;
            out["source_depths"] = depth;
            out["edited_latent"] = latent_to_array(r.edited_latent);
            out["target_latent"] = latent_to_array(r.target_latent);
            out["condition_index"] = r.condition_index;
            out["condition_frame"] = image_to_array(r.condition_frame);
            out["counters"] = counters_dict(r.counters);
            out["timings_ms"] = r.timings_ms;
            out["update_loss"] = r.update_loss;
            return out;
        },
        py::arg("scene"), py::arg("trajectory"), py::arg("settings") = py::dict(),
        py::arg("masks") = std::vector<py::array_t<std::uint8_t>>{}, py::arg("skip_update") = false,
        "Runs the editing pipeline. settings takes the same keys as a config file.");

    m.def(
        "oracle_edit_scene",
        [](const PointScene& scene, const py::dict& settings) {
            const RunSettings s = settings_from(settings);
            return oracle_edit_scene(scene, *make_editor(s.spec));
        },
        py::arg("scene"), py::arg("settings"));

    // metrics
    m.def(
        "trans_err",
        [](const std::vector<Camera>& gt, const std::vector<Camera>& est) {
            return trans_err(poses_from_cameras(gt), poses_from_cameras(est));
        },
        py::arg("gt"), py::arg("est"));
    m.def(
        "rotation_err",
        [](const std::vector<Camera>& gt, const std::vector<Camera>& est) {
            return rotation_err(poses_from_cameras(gt), poses_from_cameras(est));
        },
        py::arg("gt"), py::arg("est"));
    m.def(
        "reprojection_consistency",
        [](const std::vector<Array>& frames, const std::vector<Array>& depths, const std::vector<Camera>& cams,
           double tau) {
            std::vector<Image> f;
            std::vector<DepthMap> d;
            for (const auto& a : frames) f.push_back(image_from(a));
            for (const auto& a : depths) d.push_back(depth_from(a));
            return reprojection_consistency(f, d, cams, tau);
        },
        py::arg("frames"), py::arg("depths"), py::arg("cameras"), py::arg("tau") = 0.5);
    m.def(
        "eta_sweep",
        [](const PointScene& scene, const CameraPath& trajectory, const std::vector<double>& etas,
           const std::vector<std::uint64_t>& seeds, const py::dict& settings) {
            const RunSettings s = settings_from(settings);
            const auto editor = make_editor(s.spec);
            std::vector<SweepRow> rows;
            {
                py::gil_scoped_release release;
                rows = eta_sweep(scene, trajectory, *editor, s.spec, s.config, denoiser_provider(s.config.denoiser),
                                 etas, seeds);
            }
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["eta"] = r.eta;
                d["seed"] = r.seed;
                d["pose_err"] = r.pose_err;
                d["appearance_dist"] = r.appearance_dist;
                out.append(d);
            }
            return out;
        },
        py::arg("scene"), py::arg("trajectory"), py::arg("etas"), py::arg("seeds"), py::arg("settings") = py::dict());

    // io
    m.def("read_scene", &read_scene, py::arg("path"));
    m.def("write_scene", &write_scene, py::arg("path"), py::arg("scene"));
    m.def("read_cameras", &read_cameras, py::arg("path"));
    m.def("write_cameras", &write_cameras, py::arg("path"), py::arg("cameras"));
    m.def("read_trajectory", &read_trajectory, py::arg("path"));
    m.def("write_trajectory", &write_trajectory, py::arg("path"), py::arg("trajectory"));
    m.def(
        "read_png", [](const fs::path& p) { return image_to_array(read_png(p)); }, py::arg("path"));
    m.def(
        "write_png", [](const fs::path& p, const Array& im) { write_png(p, image_from(im)); }, py::arg("path"),
        py::arg("image"));

}
