#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vip3de/diffusion.hpp"
#include "vip3de/editor.hpp"

namespace vip3de {

struct EditConfig {
    double eta = 0.15;
    double tau = 0.5;
    double w_min = 1.0;
    double w_max = 1.5;
    int steps = 25;
    int factor = 8;
    int update_iters = 750;
    double lr = 0.05;
    std::uint64_t seed = 0;
    std::optional<int> condition_index;

    // Noise schedule; sigma_data is shared with the built-in analytic denoisers.
    double sigma_min = 0.002;
    double sigma_max = 80.0;
    double rho = 7.0;
    double sigma_data = 0.5;
    // Frames the video model can denoise at once.
    int context_len = 25;
    // Geometry-aware overriding of the conditional branch.
    bool overriding = true;
    // Built-in denoiser used by the CLI: "oracle" or "static".
    std::string denoiser = "oracle";

    ScheduleParams schedule_params() const { return {steps, sigma_min, sigma_max, rho, sigma_data}; }
    Guidance guidance() const { return Guidance::ramp(w_min, w_max); }

    // Throws InvalidArgument naming the first out-of-range field.
    void validate() const;
};

struct RunSettings {
    EditConfig config;
    EditSpec spec;
};

// Applies one `key = value` setting. Editor parameters go to settings.spec.
// Unknown keys and malformed values throw InvalidArgument.
void apply_setting(RunSettings& settings, const std::string& key, const std::string& value);

// Plain-text `key = value` lines; '#' starts a comment.
RunSettings parse_config(std::istream& in, RunSettings base = {});
RunSettings load_config(const std::string& path, RunSettings base = {});

// Splits "key=value".
std::pair<std::string, std::string> split_assignment(const std::string& text);

}  // namespace vip3de
