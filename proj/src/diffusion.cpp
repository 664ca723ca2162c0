#include "vip3de/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace vip3de {

namespace {

void check_step_range(const NoiseSchedule& schedule, int t, int lo, int hi, const char* what) {
    if (t < lo || t > hi) {
        throw InvalidArgument(std::string(what) + ": step " + std::to_string(t) + " outside [" + std::to_string(lo) +
                              ", " + std::to_string(hi) + "]");
    }
    (void)schedule;
}

void check_output(const LatentVideo& like, const LatentVideo& out) {
    if (!like.same_shape(out)) throw std::runtime_error("denoiser returned a latent of the wrong shape");
}

}  // namespace

NoiseSchedule make_schedule(const ScheduleParams& p) {
    if (p.steps < 1) throw InvalidArgument("make_schedule: steps must be >= 1");
    if (!(p.sigma_min > 0.0) || !(p.sigma_min < p.sigma_max)) {
        throw InvalidArgument("make_schedule: need 0 < sigma_min < sigma_max");
    }
    if (!(p.rho > 0.0)) throw InvalidArgument("make_schedule: rho must be positive");
    if (!(p.sigma_data > 0.0)) throw InvalidArgument("make_schedule: sigma_data must be positive");

    NoiseSchedule s;
    s.sigma_data = p.sigma_data;
    s.sigmas.reserve(static_cast<size_t>(p.steps) + 1);
    if (p.steps == 1) {
        s.sigmas.push_back(p.sigma_max);
    } else {
        const double hi = std::pow(p.sigma_max, 1.0 / p.rho);
        const double lo = std::pow(p.sigma_min, 1.0 / p.rho);
        for (int i = 0; i < p.steps; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(p.steps - 1);
            s.sigmas.push_back(std::pow(hi + frac * (lo - hi), p.rho));
        }
        // Pin the endpoints against pow round-off.
        s.sigmas.front() = p.sigma_max;
        s.sigmas[static_cast<size_t>(p.steps) - 1] = p.sigma_min;
    }
    s.sigmas.push_back(0.0);
    return s;
}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(LatentVideo mu, double sigma_data)
    : AnalyticGaussianDenoiser(
          [mu = std::move(mu)](const DenoiseContext& ctx, const LatentVideo& like) {
              return select_frames(mu, ctx, like);
          },
          sigma_data) {}

AnalyticGaussianDenoiser::AnalyticGaussianDenoiser(MeanFn mean, double sigma_data)
    : mean_(std::move(mean)), sigma_data_(sigma_data) {
    if (!(sigma_data > 0.0)) throw InvalidArgument("analytic denoiser: sigma_data must be positive");
}

AnalyticGaussianDenoiser AnalyticGaussianDenoiser::conditioned(
    std::vector<std::pair<LatentVideo, LatentVideo>> table, LatentVideo unconditional, double sigma_data) {
    auto fn = [table = std::move(table), uncond = std::move(unconditional)](const DenoiseContext& ctx,
                                                                           const LatentVideo& like) {
        if (ctx.condition == nullptr || table.empty()) return select_frames(uncond, ctx, like);
        size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < table.size(); ++i) {
            if (!table[i].first.same_shape(*ctx.condition)) continue;
            const double d = l2_distance(table[i].first, *ctx.condition);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return select_frames(table[best].second, ctx, like);
    };
    return AnalyticGaussianDenoiser(std::move(fn), sigma_data);
}

LatentVideo select_frames(const LatentVideo& full, const DenoiseContext& ctx, const LatentVideo& like) {
    if (!full.same_frame_shape(like)) throw InvalidArgument("denoiser mean: frame shape mismatch");
    if (ctx.frame_ids.empty()) {
        if (full.frames != like.frames) throw InvalidArgument("denoiser mean: frame count mismatch");
        return full;
    }
    if (static_cast<int>(ctx.frame_ids.size()) != like.frames) {
        throw InvalidArgument("denoiser mean: frame_ids do not match the latent");
    }
    return full.gather(ctx.frame_ids);
}

LatentVideo AnalyticGaussianDenoiser::evaluate(const LatentVideo& x, double sigma, const DenoiseContext& ctx) const {
    const LatentVideo mu = mean_(ctx, x);
    const double sd2 = sigma_data_ * sigma_data_;
    const double s2 = sigma * sigma;
    const double denom = s2 + sd2;
    LatentVideo out = x;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = (sd2 * x.data[i] + s2 * mu.data[i]) / denom;
    return out;
}

PreconditionedDenoiser::PreconditionedDenoiser(Network network, double sigma_data) : network_(std::move(network)) {
    if (!(sigma_data > 0.0)) throw InvalidArgument("preconditioned denoiser: sigma_data must be positive");
    coeffs_.sigma_data = sigma_data;
}

LatentVideo PreconditionedDenoiser::evaluate(const LatentVideo& x, double sigma, const DenoiseContext& ctx) const {
    if (!(sigma > 0.0)) throw InvalidArgument("preconditioned denoiser: sigma must be positive");
    LatentVideo scaled = x;
    const double cin = coeffs_.c_in(sigma);
    for (double& v : scaled.data) v *= cin;
    const LatentVideo f = network_(scaled, NoiseSchedule::c_noise(sigma), ctx);
    check_output(x, f);
    const double cskip = coeffs_.c_skip(sigma);
    const double cout = coeffs_.c_out(sigma);
    LatentVideo out = x;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = cskip * x.data[i] + cout * f.data[i];
    return out;
}

LatentVideo edm_denoise_step(const LatentVideo& x_next, int t_next, const NoiseSchedule& schedule,
                             const Denoiser& denoiser, const DenoiseContext& ctx) {
    check_step_range(schedule, t_next, 0, schedule.steps(), "edm_denoise_step");
    const double s_next = schedule.sigma(t_next);
    if (s_next == 0.0) throw InvalidArgument("edm_denoise_step: cannot step below the terminal noise level");
    const double s = schedule.sigma(t_next - 1);
    const LatentVideo d = denoiser.evaluate(x_next, s_next, ctx);
    check_output(x_next, d);
    const double h = (s - s_next) / s_next;
    LatentVideo out = x_next;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += h * (x_next.data[i] - d.data[i]);
    return out;
}

LatentVideo edm_invert_step(const LatentVideo& x_t, int t, const NoiseSchedule& schedule, const Denoiser& denoiser,
                            const DenoiseContext& ctx, InversionSubstitute substitute) {
    check_step_range(schedule, t, 0, schedule.steps() - 1, "edm_invert_step");
    const double s = schedule.sigma(t);
    const double s_next = schedule.sigma(t + 1);
    const double cskip = schedule.c_skip(s_next);

    // scaled_f = c_out(sigma_{t+1}) * F, the network part of D at sigma_{t+1}.
    LatentVideo scaled_f;
    if (substitute == InversionSubstitute::kSourceLevel && s > 0.0) {
        const LatentVideo d = denoiser.evaluate(x_t, s, ctx);
        check_output(x_t, d);
        const double ratio = schedule.c_out(s_next) / schedule.c_out(s);
        const double cskip_t = schedule.c_skip(s);
        scaled_f = d;
        for (size_t i = 0; i < d.data.size(); ++i) scaled_f.data[i] = ratio * (d.data[i] - cskip_t * x_t.data[i]);
    } else {
        const LatentVideo d = denoiser.evaluate(x_t, s_next, ctx);
        check_output(x_t, d);
        scaled_f = d;
        for (size_t i = 0; i < d.data.size(); ++i) scaled_f.data[i] = d.data[i] - cskip * x_t.data[i];
    }

    const double denom = s - s * cskip + s_next * cskip;
    LatentVideo out = x_t;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = (s_next * x_t.data[i] + (s - s_next) * scaled_f.data[i]) / denom;
    }
    return out;
}

std::vector<LatentVideo> invert(const LatentVideo& x0, const NoiseSchedule& schedule, const Denoiser& denoiser,
                                const DenoiseContext& ctx, InversionSubstitute substitute) {
    std::vector<LatentVideo> path;
    path.reserve(static_cast<size_t>(schedule.steps()));
    const LatentVideo* cur = &x0;
    for (int t = 0; t < schedule.steps(); ++t) {
        path.push_back(edm_invert_step(*cur, t, schedule, denoiser, ctx, substitute));
        cur = &path.back();
    }
    return path;
}

LatentVideo blend_noise(const LatentVideo& x_T, const LatentVideo& epsilon, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("eta out of range");
    if (!x_T.same_shape(epsilon)) throw InvalidArgument("blend_noise: shape mismatch");
    const double a = std::sqrt(eta);
    const double b = std::sqrt(1.0 - eta);
    LatentVideo out = x_T;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x_T.data[i] + b * epsilon.data[i];
    return out;
}

double Guidance::at(int frame, int frames) const {
    if (frames <= 1) return w_min;
    return w_min + (w_max - w_min) * static_cast<double>(frame) / static_cast<double>(frames - 1);
}

LatentVideo cfg_combine(const LatentVideo& cond, const LatentVideo& uncond, const Guidance& guidance) {
    if (!cond.same_shape(uncond)) throw InvalidArgument("cfg_combine: shape mismatch");
    LatentVideo out = cond;
    const size_t fs = cond.frame_size();
    for (int n = 0; n < cond.frames; ++n) {
        const double w = guidance.at(n, cond.frames);
        for (size_t j = n * fs; j < (n + 1) * fs; ++j) {
            out.data[j] = (1.0 + w) * cond.data[j] - w * uncond.data[j];
        }
    }
    return out;
}

LatentVideo sample(const LatentVideo& x_hat_T, const NoiseSchedule& schedule, const Denoiser& denoiser,
                   const DenoiseContext& cond, const SampleOptions& options) {
    if (options.correspondence != nullptr) {
        const auto& m = *options.correspondence;
        if (m.frames != x_hat_T.frames || m.latent_height != x_hat_T.height || m.latent_width != x_hat_T.width) {
            throw InvalidArgument("sample: correspondence latent resolution does not match the latent video");
        }
    }
    DenoiseContext uncond = cond;
    uncond.condition = nullptr;

    LatentVideo x = x_hat_T;
    for (int t = schedule.steps(); t >= 1; --t) {
        const double s = schedule.sigma(t);
        const double s_prev = schedule.sigma(t - 1);
        LatentVideo x_cond = options.correspondence ? override_latent(x, *options.correspondence) : x;
        if (options.on_override && options.correspondence) options.on_override(t, x_cond, x);

        LatentVideo d_cond;
        LatentVideo d_uncond;
        parallel_for(2, [&](size_t branch) {
            if (branch == 0) {
                d_cond = denoiser.evaluate(x_cond, s, cond);
            } else {
                d_uncond = denoiser.evaluate(x, s, uncond);
            }
        });
        check_output(x, d_cond);
        check_output(x, d_uncond);
        const LatentVideo d = cfg_combine(d_cond, d_uncond, options.guidance);
        const double h = (s_prev - s) / s;
        for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += h * (x.data[i] - d.data[i]);
    }
    return x;
}

}  // namespace vip3de
