#include "vip3de/editor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace vip3de {

namespace {

Vec3 clamp01(const Vec3& c) { return c.cwiseMax(0.0).cwiseMin(1.0); }

std::vector<double> parse_list(const std::string& key, const std::string& text, size_t expected) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            values.push_back(std::stod(item, &used));
            while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InvalidArgument("editor parameter " + key + ": not a number list: " + text);
        }
    }
    if (values.size() != expected) {
        throw InvalidArgument("editor parameter " + key + ": expected " + std::to_string(expected) + " values");
    }
    return values;
}

double param_or(const EditSpec& spec, const std::string& key, double fallback) {
    auto it = spec.params.find(key);
    return it == spec.params.end() ? fallback : parse_list(key, it->second, 1)[0];
}

Vec3 vec_or(const EditSpec& spec, const std::string& key, const Vec3& fallback) {
    auto it = spec.params.find(key);
    if (it == spec.params.end()) return fallback;
    const auto v = parse_list(key, it->second, 3);
    return {v[0], v[1], v[2]};
}

}  // namespace

Image ToyEditor::apply(const Image& frame, const EditMask* mask) const {
    if (frame.channels != 3) throw InvalidArgument("editor: expected an rgb image");
    if (mask && (mask->width != frame.width || mask->height != frame.height)) {
        throw InvalidArgument("editor: mask does not match the frame");
    }
    Image out = frame;
    const bool masked = uses_mask() && mask != nullptr;
    for (size_t p = 0; p < frame.pixel_count(); ++p) {
        if (masked && mask->data[p] == 0) continue;
        const Vec3 c(frame.data[3 * p], frame.data[3 * p + 1], frame.data[3 * p + 2]);
        const Vec3 e = clamp01(edit_color(c));
        for (int ch = 0; ch < 3; ++ch) out.data[3 * p + static_cast<size_t>(ch)] = e[ch];
    }
    return out;
}

HueRotateEditor::HueRotateEditor(double degrees) {
    const double a = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(a);
    const double s = std::sin(a);
    const double k = (1.0 - c) / 3.0;
    const double r = std::sqrt(1.0 / 3.0) * s;
    // Rodrigues rotation about (1,1,1)/sqrt(3).
    m_ << c + k, k - r, k + r, k + r, c + k, k - r, k - r, k + r, c + k;
}

Vec3 HueRotateEditor::edit_color(const Vec3& rgb) const { return clamp01(m_ * rgb); }

Vec3 ChannelAffineEditor::edit_color(const Vec3& rgb) const { return clamp01(m_ * rgb + b_); }

MaskRecolorEditor::MaskRecolorEditor(const Vec3& color, double strength) : color_(color), strength_(strength) {
    if (!(strength >= 0.0 && strength <= 1.0)) throw InvalidArgument("mask_recolor: strength must be in [0,1]");
}

Vec3 MaskRecolorEditor::edit_color(const Vec3& rgb) const {
    const double luma = rgb.mean();
    const Vec3 shaded = clamp01(color_ + Vec3::Constant(luma - 0.5));
    return clamp01((1.0 - strength_) * rgb + strength_ * shaded);
}

std::vector<std::string> editor_param_keys(const std::string& kind) {
    if (kind == "identity") return {};
    if (kind == "hue_rotate") return {"hue_degrees"};
    if (kind == "recolor") return {"recolor_matrix", "recolor_bias"};
    if (kind == "mask_recolor") return {"recolor_color", "recolor_strength"};
    throw InvalidArgument("unknown editor: " + kind);
}

std::unique_ptr<ToyEditor> make_editor(const EditSpec& spec) {
    const auto keys = editor_param_keys(spec.editor);
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [key, value] : spec.params) {
        if (!allowed.count(key)) throw InvalidArgument("parameter " + key + " does not apply to editor " + spec.editor);
    }
    if (spec.editor == "identity") return std::make_unique<IdentityEditor>();
    if (spec.editor == "hue_rotate") return std::make_unique<HueRotateEditor>(param_or(spec, "hue_degrees", 120.0));
    if (spec.editor == "recolor") {
        // Default recolor swaps red and blue.
        Mat3 m;
        m << 0, 0, 1, 0, 1, 0, 1, 0, 0;
        if (auto it = spec.params.find("recolor_matrix"); it != spec.params.end()) {
            const auto v = parse_list("recolor_matrix", it->second, 9);
            m << v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8];
        }
        return std::make_unique<ChannelAffineEditor>(m, vec_or(spec, "recolor_bias", Vec3::Zero()));
    }
    return std::make_unique<MaskRecolorEditor>(vec_or(spec, "recolor_color", Vec3(0.9, 0.2, 0.2)),
                                               param_or(spec, "recolor_strength", 1.0));
}

PointScene oracle_edit_scene(const PointScene& scene, const ToyEditor& editor, const Camera* reference,
                             const EditMask* reference_mask) {
    PointScene out = scene;
    std::vector<bool> selected(scene.size(), true);
    if (editor.uses_mask() && reference != nullptr && reference_mask != nullptr) {
        std::fill(selected.begin(), selected.end(), false);
        const RenderedFrame frame = render(scene, *reference);
        for (size_t p = 0; p < frame.point_index.size(); ++p) {
            const int idx = frame.point_index[p];
            if (idx >= 0 && reference_mask->data[p] != 0) selected[static_cast<size_t>(idx)] = true;
        }
    }
    for (size_t i = 0; i < out.points.size(); ++i) {
        if (selected[i]) out.points[i].color = clamp01(editor.edit_color(out.points[i].color));
    }
    return out;
}

}  // namespace vip3de
