#include "vip3de/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace vip3de {

namespace {

void check_factor(int width, int height, int factor) {
    if (factor < 1 || width % factor != 0 || height % factor != 0) {
        throw InvalidArgument("factor " + std::to_string(factor) + " does not divide " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
}

LatentVideo broadcast_frame(const LatentVideo& frame, int frames) {
    LatentVideo out(frames, frame.channels, frame.height, frame.width);
    for (int n = 0; n < frames; ++n) std::copy(frame.data.begin(), frame.data.end(), out.frame(n).begin());
    return out;
}

template <class Fn>
auto run_stage(const std::string& name, std::map<std::string, double>& timings, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto record = [&] {
        const auto end = std::chrono::steady_clock::now();
        timings[name] += std::chrono::duration<double, std::milli>(end - start).count();
    };
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            record();
        } else {
            auto result = fn();
            record();
            return result;
        }
    } catch (const StageError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw StageError(name, e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(name, e.what(), false);
    }
}

}  // namespace

LatentVideo encode_image(const Image& image, int factor) {
    check_factor(image.width, image.height, factor);
    const int h = image.height / factor;
    const int w = image.width / factor;
    LatentVideo out(1, image.channels, h, w);
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int c = 0; c < image.channels; ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double sum = 0.0;
                for (int dy = 0; dy < factor; ++dy) {
                    for (int dx = 0; dx < factor; ++dx) sum += image.at(x * factor + dx, y * factor + dy, c);
                }
                out.at(0, c, y, x) = factor == 1 ? sum : sum * inv;
            }
        }
    }
    return out;
}

LatentVideo encode_video(const std::vector<Image>& frames, int factor) {
    if (frames.empty()) throw InvalidArgument("encode_video: no frames");
    const LatentVideo first = encode_image(frames[0], factor);
    LatentVideo out(static_cast<int>(frames.size()), first.channels, first.height, first.width);
    for (size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].same_shape(frames[0])) throw InvalidArgument("encode_video: frames differ in shape");
        const LatentVideo one = i == 0 ? first : encode_image(frames[i], factor);
        std::copy(one.data.begin(), one.data.end(), out.frame(static_cast<int>(i)).begin());
    }
    return out;
}

Image decode_frame(const LatentVideo& latent, int frame, int factor) {
    if (factor < 1) throw InvalidArgument("decode: factor must be >= 1");
    const int lh = latent.height;
    const int lw = latent.width;
    Image out(lw * factor, lh * factor, latent.channels);
    const double offset = 0.5 * (factor - 1);
    auto coord = [&](int p, int n, int& i0, int& i1, double& a) {
        const double l = std::clamp((p - offset) / factor, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<int>(std::floor(l));
        i1 = std::min(i0 + 1, n - 1);
        a = l - i0;
    };
    for (int y = 0; y < out.height; ++y) {
        int y0, y1;
        double ay;
        coord(y, lh, y0, y1, ay);
        for (int x = 0; x < out.width; ++x) {
            int x0, x1;
            double ax;
            coord(x, lw, x0, x1, ax);
            for (int c = 0; c < latent.channels; ++c) {
                const double v00 = latent.at(frame, c, y0, x0);
                const double v01 = latent.at(frame, c, y0, x1);
                const double v10 = latent.at(frame, c, y1, x0);
                const double v11 = latent.at(frame, c, y1, x1);
                const double top = v00 + ax * (v01 - v00);
                const double bottom = v10 + ax * (v11 - v10);
                out.at(x, y, c) = top + ay * (bottom - top);
            }
        }
    }
    return out;
}

std::vector<Image> decode_video(const LatentVideo& latent, int factor) {
    std::vector<Image> frames;
    frames.reserve(static_cast<size_t>(latent.frames));
    for (int n = 0; n < latent.frames; ++n) frames.push_back(decode_frame(latent, n, factor));
    return frames;
}

double edit_saliency(const Image& source, const Image& edited, const EditMask* mask) {
    if (!source.same_shape(edited)) throw InvalidArgument("edit_saliency: shape mismatch");
    double sum = 0.0;
    size_t count = 0;
    for (size_t p = 0; p < source.pixel_count(); ++p) {
        if (mask && mask->data[p] == 0) continue;
        for (int c = 0; c < source.channels; ++c) {
            const size_t i = p * static_cast<size_t>(source.channels) + static_cast<size_t>(c);
            sum += std::abs(edited.data[i] - source.data[i]);
        }
        count += static_cast<size_t>(source.channels);
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

ConditionChoice select_condition_frame(const std::vector<Image>& frames, const ToyEditor& editor,
                                       const EditSpec& spec, const EditConfig& config) {
    if (frames.empty()) throw InvalidArgument("select_condition_frame: no frames");
    if (config.condition_index) {
        const int k = *config.condition_index;
        if (k < 0 || k >= static_cast<int>(frames.size())) throw InvalidArgument("condition_index out of range");
        return {k, editor.apply(frames[static_cast<size_t>(k)], spec.mask_for(static_cast<size_t>(k)))};
    }
    std::vector<Image> edited(frames.size());
    std::vector<double> score(frames.size());
    parallel_for(frames.size(), [&](size_t i) {
        edited[i] = editor.apply(frames[i], spec.mask_for(i));
        score[i] = edit_saliency(frames[i], edited[i], spec.mask_for(i));
    });
    size_t best = 0;
    for (size_t i = 1; i < frames.size(); ++i) {
        if (score[i] > score[best]) best = i;
    }
    return {static_cast<int>(best), std::move(edited[best])};
}

ParallelSplit split_for_parallel(int frame_count, int cond_index) {
    if (cond_index < 0 || cond_index >= frame_count) throw InvalidArgument("split_for_parallel: index out of range");
    ParallelSplit s;
    for (int i = cond_index; i >= 0; --i) s.prefix.push_back(i);
    for (int i = cond_index; i < frame_count; ++i) s.suffix.push_back(i);
    return s;
}

std::vector<std::vector<int>> chunk_autoregressive(const std::vector<int>& indices, int context_len) {
    if (context_len < 2) throw InvalidArgument("chunk_autoregressive: context_len must be >= 2");
    std::vector<std::vector<int>> chunks;
    const int n = static_cast<int>(indices.size());
    if (n == 0) return chunks;
    int start = 0;
    while (true) {
        const int end = std::min(n, start + context_len);
        std::vector<int> chunk;
        for (int i = start; i < end; ++i) chunk.push_back(i);
        chunks.push_back(std::move(chunk));
        if (end == n) break;
        start = end - 1;
    }
    return chunks;
}

DenoiserSetup make_oracle_denoiser(const DenoiserInputs& in) {
    const int k = in.condition_index;
    const auto& cams = *in.cameras;
    const PointScene oracle =
        oracle_edit_scene(*in.scene, *in.editor, &cams[static_cast<size_t>(k)], in.spec->mask_for(static_cast<size_t>(k)));
    std::vector<Image> renders;
    for (const auto& f : render_all(oracle, cams, in.render_options)) renders.push_back(f.rgb);
    LatentVideo target = encode_video(renders, in.config->factor);

    std::vector<std::pair<LatentVideo, LatentVideo>> table;
    table.emplace_back(*in.source_condition, *in.source_latent);
    table.emplace_back(*in.edited_condition, target);
    auto denoiser = std::make_shared<AnalyticGaussianDenoiser>(
        AnalyticGaussianDenoiser::conditioned(std::move(table), target, in.config->sigma_data));
    return {std::move(denoiser), std::move(target)};
}

DenoiserSetup make_static_denoiser(const DenoiserInputs& in) {
    const LatentVideo fallback = *in.edited_condition;
    auto mean = [fallback](const DenoiseContext& ctx, const LatentVideo& like) {
        const LatentVideo& cond = ctx.condition ? *ctx.condition : fallback;
        if (!cond.same_frame_shape(like)) throw InvalidArgument("static denoiser: condition shape mismatch");
        return broadcast_frame(cond, like.frames);
    };
    auto denoiser = std::make_shared<AnalyticGaussianDenoiser>(std::move(mean), in.config->sigma_data);
    return {std::move(denoiser), broadcast_frame(*in.edited_condition, in.source_latent->frames)};
}

DenoiserProvider denoiser_provider(const std::string& name) {
    if (name == "oracle") return make_oracle_denoiser;
    if (name == "static") return make_static_denoiser;
    throw InvalidArgument("unknown denoiser: " + name);
}

PipelineResult run_vip3de(const PointScene& scene, const CameraPath& trajectory, const ToyEditor& editor,
                          const EditSpec& spec, const EditConfig& config, const DenoiserProvider& provider,
                          const PipelineOptions& options) {
    PipelineResult result;
    auto& timings = result.timings_ms;
    auto& counters = result.counters;

    run_stage("validate", timings, [&] {
        config.validate();
        trajectory.validate();
        scene.validate();
        const auto& cam0 = trajectory.cameras.front();
        for (const auto& cam : trajectory.cameras) {
            if (cam.width != cam0.width || cam.height != cam0.height) {
                throw InvalidArgument("trajectory cameras must share the image size");
            }
        }
        check_factor(cam0.width, cam0.height, config.factor);
        if (!spec.masks.empty() && spec.masks.size() != trajectory.size()) {
            throw InvalidArgument("expected one mask per trajectory frame");
        }
        for (const auto& m : spec.masks) {
            if (m.width != cam0.width || m.height != cam0.height) throw InvalidArgument("mask size mismatch");
        }
    });

    const auto& cams = trajectory.cameras;
    const int n = static_cast<int>(cams.size());

    result.source_frames = run_stage("render", timings, [&] {
        ++counters.render;
        return render_all(scene, cams, options.render);
    });
    std::vector<Image> source_rgb;
    std::vector<DepthMap> depths;
    for (const auto& f : result.source_frames) {
        source_rgb.push_back(f.rgb);
        depths.push_back(f.depth);
    }

    const ConditionChoice choice = run_stage("condition", timings, [&] {
        ++counters.condition;
        return select_condition_frame(source_rgb, editor, spec, config);
    });
    const int k = choice.index;
    result.condition_index = k;
    result.condition_frame = choice.edited;

    LatentVideo source_condition;
    LatentVideo edited_condition;
    run_stage("encode", timings, [&] {
        ++counters.encode;
        result.source_latent = encode_video(source_rgb, config.factor);
        source_condition = result.source_latent.extract_frame(k);
        edited_condition = encode_image(choice.edited, config.factor);
    });

    const DenoiserSetup setup = run_stage("denoiser", timings, [&] {
        DenoiserInputs in;
        in.scene = &scene;
        in.cameras = &cams;
        in.source = &result.source_frames;
        in.source_latent = &result.source_latent;
        in.source_condition = &source_condition;
        in.edited_condition = &edited_condition;
        in.editor = &editor;
        in.spec = &spec;
        in.config = &config;
        in.condition_index = k;
        in.render_options = options.render;
        DenoiserSetup s = provider(in);
        if (!s.denoiser) throw InvalidArgument("denoiser provider returned no denoiser");
        return s;
    });
    result.target_latent = setup.target;
    const Denoiser& denoiser = *setup.denoiser;
    const NoiseSchedule schedule = make_schedule(config.schedule_params());

    const LatentVideo inverted = run_stage("invert", timings, [&] {
        ++counters.invert;
        DenoiseContext ctx;
        ctx.condition = &source_condition;
        return invert(result.source_latent, schedule, denoiser, ctx).back();
    });

    const LatentVideo x_hat_T = run_stage("blend", timings, [&] {
        ++counters.blend;
        const auto& x = inverted;
        const LatentVideo eps = gaussian_noise(x.frames, x.channels, x.height, x.width, schedule.sigma_max(), config.seed);
        return blend_noise(x, eps, config.eta);
    });

    // Sub-videos split at the condition frame, then chunked to the context length.
    struct Segment {
        std::vector<int> ids;
        CorrespondenceMap map;
        bool keep_first = true;
    };
    const ParallelSplit split = split_for_parallel(n, k);
    std::vector<std::vector<Segment>> sequences;
    run_stage("correspondence", timings, [&] {
        ++counters.correspondence;
        for (const auto* seq : {&split.suffix, &split.prefix}) {
            // The prefix copy of frame k is dropped, so a one-frame prefix contributes nothing.
            if (seq == &split.prefix && seq->size() <= 1) continue;
            std::vector<Segment> segments;
            const auto chunks = chunk_autoregressive(*seq, config.context_len);
            for (size_t c = 0; c < chunks.size(); ++c) {
                Segment s;
                for (int pos : chunks[c]) s.ids.push_back((*seq)[static_cast<size_t>(pos)]);
                s.keep_first = seq == &split.suffix && c == 0;
                if (config.overriding) {
                    std::vector<DepthMap> d;
                    std::vector<Camera> cs;
                    for (int id : s.ids) {
                        d.push_back(depths[static_cast<size_t>(id)]);
                        cs.push_back(cams[static_cast<size_t>(id)]);
                    }
                    s.map = build_correspondence(d, cs, config.tau, config.factor);
                }
                segments.push_back(std::move(s));
            }
            sequences.push_back(std::move(segments));
        }
    });

    result.edited_latent = run_stage("sample", timings, [&] {
        ++counters.sample;
        LatentVideo out(n, x_hat_T.channels, x_hat_T.height, x_hat_T.width);
        SampleOptions base;
        base.guidance = config.guidance();
        parallel_for(sequences.size(), [&](size_t s) {
            LatentVideo condition = edited_condition;
            for (const auto& seg : sequences[s]) {
                SampleOptions opts = base;
                if (config.overriding) opts.correspondence = &seg.map;
                DenoiseContext ctx;
                ctx.condition = &condition;
                ctx.frame_ids = seg.ids;
                const LatentVideo y = sample(x_hat_T.gather(seg.ids), schedule, denoiser, ctx, opts);
                for (size_t j = seg.keep_first ? 0 : 1; j < seg.ids.size(); ++j) {
                    auto src = y.frame(static_cast<int>(j));
                    std::copy(src.begin(), src.end(), out.frame(seg.ids[j]).begin());
                }
                condition = y.extract_frame(y.frames - 1);
            }
        });
        for (const auto& seq : sequences) counters.sample_segments += static_cast<int>(seq.size());
        return out;
    });

    result.edited_frames = run_stage("decode", timings, [&] {
        ++counters.decode;
        std::vector<Image> frames = decode_video(result.edited_latent, config.factor);
        for (size_t i = 0; i < frames.size(); ++i) {
            auto& f = frames[i];
            const EditMask* mask = spec.mask_for(i);
            for (size_t p = 0; p < f.pixel_count(); ++p) {
                const double m = mask ? static_cast<double>(mask->data[p] != 0) : 1.0;
                for (int c = 0; c < 3; ++c) {
                    const size_t j = 3 * p + static_cast<size_t>(c);
                    const double v = std::clamp(f.data[j], 0.0, 1.0);
                    f.data[j] = m * v + (1.0 - m) * source_rgb[i].data[j];
                }
            }
        }
        return frames;
    });

    if (options.skip_update) {
        result.scene = scene;
        return result;
    }

    run_stage("update", timings, [&] {
        ++counters.update;
        std::vector<SupervisionView> views;
        for (int i = 0; i < n; ++i) {
            SupervisionView v{cams[static_cast<size_t>(i)], result.edited_frames[static_cast<size_t>(i)], std::nullopt};
            if (const EditMask* m = spec.mask_for(static_cast<size_t>(i))) v.mask = *m;
            views.push_back(std::move(v));
        }
        UpdateResult upd = update_scene(scene, views, config.update_iters, config.lr, options.render);
        result.scene = std::move(upd.scene);
        result.update_loss = std::move(upd.loss);
    });
    return result;
}

}  // namespace vip3de
