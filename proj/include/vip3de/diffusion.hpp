#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "vip3de/correspondence.hpp"
#include "vip3de/latent.hpp"

namespace vip3de {

// Karras-spaced EDM noise levels. sigmas is stored from high to low noise and
// ends with 0; step t in [0, T] has noise level sigma(t) = sigmas[T - t].
struct NoiseSchedule {
    std::vector<double> sigmas;
    double sigma_data = 0.5;

    int steps() const { return static_cast<int>(sigmas.size()) - 1; }
    double sigma(int t) const { return sigmas[static_cast<size_t>(steps() - t)]; }
    double sigma_max() const { return sigmas.front(); }

    double c_skip(double s) const { return sigma_data * sigma_data / (s * s + sigma_data * sigma_data); }
    double c_out(double s) const { return s * sigma_data / std::sqrt(s * s + sigma_data * sigma_data); }
    double c_in(double s) const { return 1.0 / std::sqrt(s * s + sigma_data * sigma_data); }
    static double c_noise(double s) { return 0.25 * std::log(s); }
};

struct ScheduleParams {
    int steps = 25;
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    double sigma_data = 0.5;
};

NoiseSchedule make_schedule(const ScheduleParams& params = {});

struct DenoiseContext {
    // Single-frame latent of the conditioning image; null for the unconditional branch.
    const LatentVideo* condition = nullptr;
    // Source-video frame index of each frame of x. Empty means 0..N-1.
    std::span<const int> frame_ids;
};

// D(x, sigma; I): the denoised estimate of x at noise level sigma.
class Denoiser {
  public:
    virtual ~Denoiser() = default;
    virtual LatentVideo evaluate(const LatentVideo& x, double sigma, const DenoiseContext& ctx) const = 0;
};

// Optimal denoiser for data ~ N(mu, sigma_data^2 I):
// D(x, sigma) = (sigma_data^2 x + sigma^2 mu) / (sigma^2 + sigma_data^2).
// The mean may depend on the condition and on which source frames are being denoised.
class AnalyticGaussianDenoiser : public Denoiser {
  public:
    using MeanFn = std::function<LatentVideo(const DenoiseContext& ctx, const LatentVideo& like)>;

    AnalyticGaussianDenoiser(LatentVideo mu, double sigma_data);
    AnalyticGaussianDenoiser(MeanFn mean, double sigma_data);

    // Condition-shifted mean: the condition picks the entry whose key latent is
    // nearest in L2 (first wins ties); no condition selects `unconditional`.
    // Means are full-video latents indexed by DenoiseContext::frame_ids.
    static AnalyticGaussianDenoiser conditioned(std::vector<std::pair<LatentVideo, LatentVideo>> table,
                                                LatentVideo unconditional, double sigma_data);

    LatentVideo evaluate(const LatentVideo& x, double sigma, const DenoiseContext& ctx) const override;
    LatentVideo mean(const DenoiseContext& ctx, const LatentVideo& like) const { return mean_(ctx, like); }
    double sigma_data() const { return sigma_data_; }

  private:
    MeanFn mean_;
    double sigma_data_;
};

// Selects frames of a full-video latent for the frames being denoised.
LatentVideo select_frames(const LatentVideo& full, const DenoiseContext& ctx, const LatentVideo& like);

// EDM-preconditioned network: D = c_skip x + c_out F(c_in x, c_noise; I).
class PreconditionedDenoiser : public Denoiser {
  public:
    using Network = std::function<LatentVideo(const LatentVideo& scaled_x, double c_noise, const DenoiseContext& ctx)>;

    PreconditionedDenoiser(Network network, double sigma_data);
    LatentVideo evaluate(const LatentVideo& x, double sigma, const DenoiseContext& ctx) const override;

  private:
    Network network_;
    NoiseSchedule coeffs_;
};

// One Euler step of the probability-flow ODE from step t_next to t_next - 1.
LatentVideo edm_denoise_step(const LatentVideo& x_next, int t_next, const NoiseSchedule& schedule,
                             const Denoiser& denoiser, const DenoiseContext& ctx);

// Where the inversion step evaluates the network it cannot evaluate at the
// unknown x_{t+1}.
enum class InversionSubstitute {
    // F(c_in(sigma_{t+1}) x_t, c_noise(sigma_{t+1})): only the latent is substituted.
    kTargetLevel,
    // F(c_in(sigma_t) x_t, c_noise(sigma_t)): latent and noise level are both
    // taken from step t. Step 0 has no noise level and uses kTargetLevel.
    kSourceLevel,
};

// Solves the Euler denoising step for x_{t+1} given x_t:
//   x_{t+1} = (sigma_{t+1} x_t + (sigma_t - sigma_{t+1}) c_out F)
//             / (sigma_t - sigma_t c_skip + sigma_{t+1} c_skip),
// with c_skip, c_out at sigma_{t+1} and F the substituted network output.
// Exact inverse of edm_denoise_step for the analytic Gaussian denoiser when
// the schedule's sigma_data matches and the substitute is kTargetLevel.
LatentVideo edm_invert_step(const LatentVideo& x_t, int t, const NoiseSchedule& schedule, const Denoiser& denoiser,
                            const DenoiseContext& ctx,
                            InversionSubstitute substitute = InversionSubstitute::kTargetLevel);

// Runs edm_invert_step from x_0 up to step T; returns {x_1, ..., x_T}.
std::vector<LatentVideo> invert(const LatentVideo& x0, const NoiseSchedule& schedule, const Denoiser& denoiser,
                                const DenoiseContext& ctx,
                                InversionSubstitute substitute = InversionSubstitute::kTargetLevel);

// sqrt(eta) x_T + sqrt(1 - eta) epsilon.
LatentVideo blend_noise(const LatentVideo& x_T, const LatentVideo& epsilon, double eta);

// Guidance scale, constant or ramped linearly over the frame axis.
struct Guidance {
    double w_min = 1.0;
    double w_max = 1.0;

    static Guidance constant(double w) { return {w, w}; }
    static Guidance ramp(double lo, double hi) { return {lo, hi}; }
    double at(int frame, int frames) const;
};

// (1 + w_i) cond - w_i uncond per frame i.
LatentVideo cfg_combine(const LatentVideo& cond, const LatentVideo& uncond, const Guidance& guidance);

struct SampleOptions {
    Guidance guidance = Guidance::ramp(1.0, 1.5);
    // Geometry-aware overriding of the conditional branch; null disables it.
    const CorrespondenceMap* correspondence = nullptr;
    // Called with (t, overridden conditional latent, state) right after each overriding.
    std::function<void(int, const LatentVideo&, const LatentVideo&)> on_override;
};

// Denoises x_hat_T from step T to 0. At each step the unconditional branch sees
// the state, the conditional branch sees the state after correspondence
// overriding; the two denoised estimates are combined with classifier-free
// guidance and one Euler step is taken.
LatentVideo sample(const LatentVideo& x_hat_T, const NoiseSchedule& schedule, const Denoiser& denoiser,
                   const DenoiseContext& cond, const SampleOptions& options = {});

}  // namespace vip3de
