#include "vip3de/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

namespace vip3de {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size()) return d;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("config " + key + ": not a number: " + v);
}

long long to_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        const long long i = std::stoll(v, &used);
        if (used == v.size()) return i;
    } catch (const std::exception&) {
    }
    throw InvalidArgument("config " + key + ": not an integer: " + v);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw InvalidArgument("config " + key + ": not a boolean: " + v);
}

}  // namespace

void EditConfig::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidArgument("eta out of range");
    if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
    if (steps < 1) throw InvalidArgument("steps must be >= 1");
    if (factor < 1) throw InvalidArgument("factor must be >= 1");
    if (update_iters < 1) throw InvalidArgument("update_iters must be >= 1");
    if (!(lr > 0.0)) throw InvalidArgument("lr must be positive");
    if (condition_index && *condition_index < 0) throw InvalidArgument("condition_index must be >= 0");
    if (!(sigma_min > 0.0) || !(sigma_min < sigma_max)) throw InvalidArgument("need 0 < sigma_min < sigma_max");
    if (!(rho > 0.0)) throw InvalidArgument("rho must be positive");
    if (!(sigma_data > 0.0)) throw InvalidArgument("sigma_data must be positive");
    if (context_len < 2) throw InvalidArgument("context_len must be >= 2");
    if (denoiser != "oracle" && denoiser != "static") throw InvalidArgument("unknown denoiser: " + denoiser);
}

void apply_setting(RunSettings& s, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string v = trim(raw_value);
    auto& c = s.config;
    if (key == "eta") c.eta = to_double(key, v);
    else if (key == "tau") c.tau = to_double(key, v);
    else if (key == "w") c.w_min = c.w_max = to_double(key, v);
    else if (key == "w_min") c.w_min = to_double(key, v);
    else if (key == "w_max") c.w_max = to_double(key, v);
    else if (key == "steps") c.steps = static_cast<int>(to_int(key, v));
    else if (key == "factor") c.factor = static_cast<int>(to_int(key, v));
    else if (key == "update_iters") c.update_iters = static_cast<int>(to_int(key, v));
    else if (key == "lr") c.lr = to_double(key, v);
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, v));
    else if (key == "condition_index") {
        if (v == "none" || v.empty()) c.condition_index.reset();
        else c.condition_index = static_cast<int>(to_int(key, v));
    }
    else if (key == "sigma_min") c.sigma_min = to_double(key, v);
    else if (key == "sigma_max") c.sigma_max = to_double(key, v);
    else if (key == "rho") c.rho = to_double(key, v);
    else if (key == "sigma_data") c.sigma_data = to_double(key, v);
    else if (key == "context_len") c.context_len = static_cast<int>(to_int(key, v));
    else if (key == "overriding") c.overriding = to_bool(key, v);
    else if (key == "denoiser") c.denoiser = v;
    else if (key == "editor") {
        editor_param_keys(v);
        s.spec.editor = v;
    } else if (key == "hue_degrees" || key == "recolor_matrix" || key == "recolor_bias" || key == "recolor_color" ||
               key == "recolor_strength") {
        s.spec.params[key] = v;
    } else {
        throw InvalidArgument("unknown config key: " + key);
    }
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key=value, got: " + text);
    return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

RunSettings parse_config(std::istream& in, RunSettings base) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        try {
            auto [key, value] = split_assignment(line);
            apply_setting(base, key, value);
        } catch (const InvalidArgument& e) {
            throw InvalidArgument("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return base;
}

RunSettings load_config(const std::string& path, RunSettings base) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read config file: " + path);
    return parse_config(in, std::move(base));
}

}  // namespace vip3de
