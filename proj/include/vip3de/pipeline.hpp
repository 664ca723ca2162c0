#pragma once

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "vip3de/config.hpp"
#include "vip3de/correspondence.hpp"
#include "vip3de/diffusion.hpp"
#include "vip3de/editor.hpp"
#include "vip3de/scene.hpp"
#include "vip3de/trajectory.hpp"

namespace vip3de {

// Pooling codec standing in for a VAE: encode is f x f area averaging per
// channel, decode is bilinear upsampling from cell centers (edge-clamped).
LatentVideo encode_image(const Image& image, int factor);
LatentVideo encode_video(const std::vector<Image>& frames, int factor);
Image decode_frame(const LatentVideo& latent, int frame, int factor);
std::vector<Image> decode_video(const LatentVideo& latent, int factor);

// Scores how strongly an edit changed a frame: mean absolute channel change
// over masked pixels (all pixels without a mask).
double edit_saliency(const Image& source, const Image& edited, const EditMask* mask);

struct ConditionChoice {
    int index = 0;
    Image edited;
};

// Uses config.condition_index when set, otherwise edits every frame and keeps
// the highest-scoring one (lowest index on ties).
ConditionChoice select_condition_frame(const std::vector<Image>& frames, const ToyEditor& editor,
                                       const EditSpec& spec, const EditConfig& config);

struct ParallelSplit {
    std::vector<int> prefix;  // k, k-1, ..., 0
    std::vector<int> suffix;  // k, k+1, ..., N-1
};

ParallelSplit split_for_parallel(int frame_count, int cond_index);

// Overlapping chunks of at most context_len positions; each chunk starts at the
// previous chunk's last position. Returns positions into `indices`.
std::vector<std::vector<int>> chunk_autoregressive(const std::vector<int>& indices, int context_len);

// Everything a denoiser provider may need to build the video model for a run.
struct DenoiserInputs {
    const PointScene* scene = nullptr;
    const std::vector<Camera>* cameras = nullptr;
    const std::vector<RenderedFrame>* source = nullptr;
    const LatentVideo* source_latent = nullptr;
    const LatentVideo* source_condition = nullptr;
    const LatentVideo* edited_condition = nullptr;
    const ToyEditor* editor = nullptr;
    const EditSpec* spec = nullptr;
    const EditConfig* config = nullptr;
    int condition_index = 0;
    RenderOptions render_options;
};

struct DenoiserSetup {
    std::shared_ptr<const Denoiser> denoiser;
    // Latent the edit is expected to reach under the edited condition.
    LatentVideo target;
};

using DenoiserProvider = std::function<DenoiserSetup(const DenoiserInputs&)>;

// Condition-shifted analytic model: the source condition maps to the source
// latent, the edited condition (and the unconditional branch) to the encoded
// rendering of the oracle-edited scene.
DenoiserSetup make_oracle_denoiser(const DenoiserInputs& in);

// Image-to-video toy model: the mean video holds the conditioning frame static
// over all frames; the unconditional branch uses the edited condition.
DenoiserSetup make_static_denoiser(const DenoiserInputs& in);

DenoiserProvider denoiser_provider(const std::string& name);

struct StageCounters {
    int render = 0;
    int condition = 0;
    int encode = 0;
    int invert = 0;
    int blend = 0;
    int correspondence = 0;
    int sample = 0;
    int decode = 0;
    int update = 0;
    // Solver runs inside the single sampling pass (sub-videos x chunks).
    int sample_segments = 0;
};

struct PipelineResult {
    PointScene scene;
    std::vector<Image> edited_frames;
    std::vector<RenderedFrame> source_frames;
    LatentVideo source_latent;
    LatentVideo edited_latent;
    LatentVideo target_latent;
    int condition_index = 0;
    Image condition_frame;
    StageCounters counters;
    std::map<std::string, double> timings_ms;
    std::vector<double> update_loss;
};

// Raised for failures inside a pipeline stage; what() starts with "[stage] ".
class StageError : public std::runtime_error {
  public:
    StageError(std::string stage, const std::string& message, bool invalid_argument)
        : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)), invalid_(invalid_argument) {}
    const std::string& stage() const { return stage_; }
    bool invalid_argument() const { return invalid_; }

  private:
    std::string stage_;
    bool invalid_;
};

struct PipelineOptions {
    RenderOptions render;
    // Skip the 3D update (edited views only).
    bool skip_update = false;
};

// One forward pass: render, edit the condition frame, encode, invert once,
// blend noise, build correspondences, sample once (split at the condition
// frame, chunked to the context length), decode, composite masks and update
// the scene.
PipelineResult run_vip3de(const PointScene& scene, const CameraPath& trajectory, const ToyEditor& editor,
                          const EditSpec& spec, const EditConfig& config, const DenoiserProvider& provider,
                          const PipelineOptions& options = {});

}  // namespace vip3de
