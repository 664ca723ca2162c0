#include <doctest.h>

#include <set>

#include "vip3de/demo.hpp"
#include "vip3de/metrics.hpp"
#include "vip3de/pipeline.hpp"

using namespace vip3de;

namespace {

DemoData small_demo(int frames = 6) {
    DemoOptions o;
    o.image_size = 32;
    o.grid = 32;
    o.training_views = 4;
    o.key_views = 2;
    o.frames = frames;
    return make_demo(o);
}

EditConfig small_config() {
    EditConfig c;
    c.factor = 4;
    c.sigma_data = 0.02;
    c.update_iters = 100;
    return c;
}

EditSpec recolor() {
    EditSpec s;
    s.editor = "recolor";
    return s;
}

std::set<int> visible_points(const std::vector<RenderedFrame>& frames) {
    std::set<int> out;
    for (const auto& f : frames) {
        for (int i : f.point_index) {
            if (i >= 0) out.insert(i);
        }
    }
    return out;
}

double image_mae(const Image& a, const Image& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) s += std::abs(a.data[i] - b.data[i]);
    return s / static_cast<double>(a.data.size());
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("codec examples") {
    Image img(4, 4);
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(i % 7) / 7.0;
    const LatentVideo one = encode_image(img, 1);
    CHECK(one.channels == 3);
    CHECK(one.height == 4);
    CHECK(decode_frame(one, 0, 1).data == img.data);

    const Image flat(8, 8, 3, 0.3);
    const LatentVideo lf = encode_image(flat, 4);
    CHECK(lf.height == 2);
    for (double v : lf.data) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));
    const Image back = decode_frame(lf, 0, 4);
    CHECK(back.same_shape(flat));
    for (double v : back.data) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));

    Image half(2, 2, 1);
    half.data = {0, 0, 1, 1};
    CHECK(encode_image(half, 2).data == std::vector<double>{0.5});

    CHECK_THROWS_WITH_AS(encode_image(Image(10, 8), 4), "factor 4 does not divide 10x8", InvalidArgument);
    CHECK_THROWS_AS(encode_video({Image(8, 8), Image(4, 4)}, 2), InvalidArgument);
}

TEST_CASE("decoding interpolates between cell centers") {
    LatentVideo l(1, 1, 1, 2);
    l.data = {0.0, 1.0};
    const Image img = decode_frame(l, 0, 2);
    REQUIRE(img.width == 4);
    // Cell centers sit at 0.5 and 2.5.
    CHECK(img.at(0, 0, 0) == 0.0);
    CHECK(img.at(1, 0, 0) == doctest::Approx(0.25));
    CHECK(img.at(2, 0, 0) == doctest::Approx(0.75));
    CHECK(img.at(3, 0, 0) == 1.0);
}

TEST_CASE("condition frame selection") {
    std::vector<Image> frames = {Image(4, 4, 3, 0.5), Image(4, 4, 3, 0.5), Image(4, 4, 3, 0.5)};
    frames[1].at(0, 0, 0) = 1.0;
    frames[1].at(0, 0, 2) = 0.0;
    EditSpec spec = recolor();
    const auto editor = make_editor(spec);
    EditConfig config;
    const ConditionChoice c = select_condition_frame(frames, *editor, spec, config);
    CHECK(c.index == 1);
    CHECK(c.edited.at(0, 0, 0) == 0.0);
    CHECK(c.edited.at(0, 0, 2) == 1.0);

    // Ties go to the lowest index.
    const std::vector<Image> gray(3, Image(4, 4, 3, 0.5));
    CHECK(select_condition_frame(gray, *editor, spec, config).index == 0);

    config.condition_index = 2;
    CHECK(select_condition_frame(frames, *editor, spec, config).index == 2);
    config.condition_index = 3;
    CHECK_THROWS_WITH_AS(select_condition_frame(frames, *editor, spec, config), "condition_index out of range",
                         InvalidArgument);
}

TEST_CASE("edit saliency only counts masked pixels") {
    const Image a(2, 1, 3, 0.0);
    Image b = a;
    b.at(1, 0, 0) = 0.9;
    CHECK(edit_saliency(a, b, nullptr) == doctest::Approx(0.15));
    EditMask m(2, 1, 0);
    CHECK(edit_saliency(a, b, &m) == 0.0);
    m.at(1, 0) = 1;
    CHECK(edit_saliency(a, b, &m) == doctest::Approx(0.3));
}

TEST_CASE("split and chunk examples") {
    const ParallelSplit s = split_for_parallel(5, 2);
    CHECK(s.prefix == std::vector<int>{2, 1, 0});
    CHECK(s.suffix == std::vector<int>{2, 3, 4});
    CHECK(split_for_parallel(3, 0).prefix == std::vector<int>{0});
    CHECK_THROWS_AS(split_for_parallel(3, 3), InvalidArgument);

    std::vector<int> ids(40);
    for (int i = 0; i < 40; ++i) ids[static_cast<size_t>(i)] = i;
    auto chunks = chunk_autoregressive(ids, 25);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].front() == 0);
    CHECK(chunks[0].back() == 24);
    CHECK(chunks[1].front() == 24);
    CHECK(chunks[1].back() == 39);

    ids.resize(49);
    for (int i = 0; i < 49; ++i) ids[static_cast<size_t>(i)] = i;
    chunks = chunk_autoregressive(ids, 25);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[1].front() == 24);
    CHECK(chunks[1].back() == 48);

    ids.resize(25);
    CHECK(chunk_autoregressive(ids, 25).size() == 1);
    CHECK(chunk_autoregressive({}, 25).empty());
    CHECK_THROWS_AS(chunk_autoregressive(ids, 1), InvalidArgument);
}

TEST_CASE("end-to-end runs each stage once") {
    const DemoData d = small_demo();
    const EditSpec spec = recolor();
    const auto editor = make_editor(spec);
    const EditConfig config = small_config();
    const PipelineResult r = run_vip3de(d.scene, d.trajectory, *editor, spec, config, denoiser_provider("oracle"));
    const StageCounters& c = r.counters;
    CHECK(c.render == 1);
    CHECK(c.condition == 1);
    CHECK(c.encode == 1);
    CHECK(c.invert == 1);
    CHECK(c.blend == 1);
    CHECK(c.correspondence == 1);
    CHECK(c.sample == 1);
    CHECK(c.decode == 1);
    CHECK(c.update == 1);
    CHECK(r.edited_frames.size() == 6);
    CHECK(r.edited_latent.frames == 6);
    CHECK(r.update_loss.size() == 101);
    CHECK(r.scene.size() == d.scene.size());
    for (const char* stage : {"render", "invert", "sample", "update"}) CHECK(r.timings_ms.count(stage) == 1);
    for (const auto& f : r.edited_frames) {
        for (double v : f.data) CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("long trajectories are sampled in overlapping chunks") {
    const DemoData d = small_demo(12);
    const EditSpec spec = recolor();
    const auto editor = make_editor(spec);
    EditConfig config = small_config();
    config.context_len = 4;
    config.condition_index = 5;
    PipelineOptions opts;
    opts.skip_update = true;
    const PipelineResult r = run_vip3de(d.scene, d.trajectory, *editor, spec, config, denoiser_provider("oracle"), opts);
    // Suffix 5..11 (7 positions) gives 2 chunks, prefix 5..0 (6 positions) gives 2.
    CHECK(r.counters.sample == 1);
    CHECK(r.counters.sample_segments == 4);
    CHECK(r.counters.update == 0);
    CHECK(r.edited_latent.all_finite());
}

TEST_CASE("runs are deterministic") {
    const DemoData d = small_demo();
    const EditSpec spec = recolor();
    const auto editor = make_editor(spec);
    const EditConfig config = small_config();
    const auto a = run_vip3de(d.scene, d.trajectory, *editor, spec, config, denoiser_provider("oracle"));
    set_thread_count(1);
    const auto b = run_vip3de(d.scene, d.trajectory, *editor, spec, config, denoiser_provider("oracle"));
    set_thread_count(0);
    CHECK(a.edited_latent.data == b.edited_latent.data);
    for (size_t i = 0; i < a.scene.size(); ++i) CHECK(a.scene.points[i].color == b.scene.points[i].color);
    CHECK(a.update_loss == b.update_loss);
}

TEST_CASE("all-zero masks leave the scene unchanged") {
    const DemoData d = small_demo();
    EditSpec spec = recolor();
    spec.masks.assign(d.trajectory.size(), EditMask(32, 32, 0));
    const auto editor = make_editor(spec);
    const auto r = run_vip3de(d.scene, d.trajectory, *editor, spec, small_config(), denoiser_provider("oracle"));
    for (size_t i = 0; i < d.scene.size(); ++i) CHECK(r.scene.points[i].color == d.scene.points[i].color);
    for (size_t i = 0; i < r.edited_frames.size(); ++i) CHECK(r.edited_frames[i].data == r.source_frames[i].rgb.data);
}

TEST_CASE("identity edit with full inversion reproduces the input") {
    const DemoData d = small_demo();
    const EditSpec spec;
    const auto editor = make_editor(spec);
    EditConfig config = small_config();
    config.eta = 1.0;
    config.w_min = config.w_max = 0.0;
    config.factor = 1;
    config.update_iters = 200;
    const auto r = run_vip3de(d.scene, d.trajectory, *editor, spec, config, denoiser_provider("oracle"));
    for (size_t i = 0; i < r.edited_frames.size(); ++i) {
        CHECK(image_mae(r.edited_frames[i], r.source_frames[i].rgb) <= 3e-2);
    }
    const auto visible = visible_points(r.source_frames);
    double err = 0.0;
    for (int p : visible) {
        err += (r.scene.points[static_cast<size_t>(p)].color - d.scene.points[static_cast<size_t>(p)].color)
                   .cwiseAbs()
                   .mean();
    }
    CHECK(err / static_cast<double>(visible.size()) <= 1e-2);
}

TEST_CASE("edited views stay cross-view consistent") {
    // Compared with the source passed through the same codec, which alone triples the error.
    const DemoData d = make_demo();
    const EditSpec spec = recolor();
    const auto editor = make_editor(spec);
    PipelineOptions opts;
    opts.skip_update = true;
    const auto r = run_vip3de(d.scene, d.trajectory, *editor, spec, small_config(), denoiser_provider("oracle"), opts);
    std::vector<Image> src, coded;
    std::vector<DepthMap> depths;
    for (const auto& f : r.source_frames) {
        src.push_back(f.rgb);
        coded.push_back(decode_frame(encode_image(f.rgb, 4), 0, 4));
        depths.push_back(f.depth);
    }
    const double raw = reprojection_consistency(src, depths, d.trajectory.cameras, 0.5);
    const double before = reprojection_consistency(coded, depths, d.trajectory.cameras, 0.5);
    const double after = reprojection_consistency(r.edited_frames, depths, d.trajectory.cameras, 0.5);
    CHECK(before > raw);
    CHECK(after <= 1.5 * before);
}

TEST_CASE("stage failures carry the stage name") {
    const DemoData d = small_demo();
    const EditSpec spec = recolor();
    const auto editor = make_editor(spec);
    EditConfig config = small_config();
    config.eta = 1.2;
    try {
        run_vip3de(d.scene, d.trajectory, *editor, spec, config, denoiser_provider("oracle"));
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "validate");
        CHECK(e.invalid_argument());
        CHECK(std::string(e.what()) == "[validate] eta out of range");
    }

    config = small_config();
    config.factor = 5;
    CHECK_THROWS_AS(run_vip3de(d.scene, d.trajectory, *editor, spec, config, denoiser_provider("oracle")), StageError);

    EditSpec masked = spec;
    masked.masks.assign(2, EditMask(32, 32));
    CHECK_THROWS_WITH_AS(
        run_vip3de(d.scene, d.trajectory, *editor, masked, small_config(), denoiser_provider("oracle")),
        "[validate] expected one mask per trajectory frame", StageError);

    const DenoiserProvider broken = [](const DenoiserInputs&) -> DenoiserSetup {
        throw std::runtime_error("model crashed");
    };
    try {
        run_vip3de(d.scene, d.trajectory, *editor, spec, small_config(), broken);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "denoiser");
        CHECK_FALSE(e.invalid_argument());
    }
    CHECK_THROWS_AS(denoiser_provider("unet"), InvalidArgument);
}

}
