#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vip3de/camera.hpp"
#include "vip3de/common.hpp"
#include "vip3de/scene.hpp"

namespace vip3de {

// Editor kind plus its parameters, as read from the config file.
struct EditSpec {
    std::string editor = "identity";
    std::map<std::string, std::string> params;
    // Optional per-view masks, one per trajectory frame.
    std::vector<EditMask> masks;

    const EditMask* mask_for(size_t view) const { return view < masks.size() ? &masks[view] : nullptr; }
};

// Stand-in for an instruction-driven image editor. Every built-in editor is a
// per-pixel color map, optionally restricted to a mask.
class ToyEditor {
  public:
    virtual ~ToyEditor() = default;
    virtual std::string name() const = 0;
    virtual Vec3 edit_color(const Vec3& rgb) const = 0;
    // Editors that only touch the masked region of the frame.
    virtual bool uses_mask() const { return false; }

    // Output has the input's shape and stays in [0,1].
    Image apply(const Image& frame, const EditMask* mask = nullptr) const;
};

class IdentityEditor : public ToyEditor {
  public:
    std::string name() const override { return "identity"; }
    Vec3 edit_color(const Vec3& rgb) const override { return rgb; }
};

// Rotates hue about the gray axis by the given angle.
class HueRotateEditor : public ToyEditor {
  public:
    explicit HueRotateEditor(double degrees);
    std::string name() const override { return "hue_rotate"; }
    Vec3 edit_color(const Vec3& rgb) const override;

  private:
    Mat3 m_;
};

// rgb' = clamp(M rgb + b).
class ChannelAffineEditor : public ToyEditor {
  public:
    ChannelAffineEditor(const Mat3& matrix, const Vec3& bias) : m_(matrix), b_(bias) {}
    std::string name() const override { return "recolor"; }
    Vec3 edit_color(const Vec3& rgb) const override;

  private:
    Mat3 m_;
    Vec3 b_;
};

// Blends masked pixels toward a target color, keeping their luminance variation.
class MaskRecolorEditor : public ToyEditor {
  public:
    MaskRecolorEditor(const Vec3& color, double strength);
    std::string name() const override { return "mask_recolor"; }
    Vec3 edit_color(const Vec3& rgb) const override;
    bool uses_mask() const override { return true; }

  private:
    Vec3 color_;
    double strength_;
};

// Builds the editor named by spec.editor. Unknown kinds or parameters throw InvalidArgument.
std::unique_ptr<ToyEditor> make_editor(const EditSpec& spec);

// Parameter keys accepted by make_editor for a given editor kind.
std::vector<std::string> editor_param_keys(const std::string& kind);

// Applies the editor's color map directly to the scene's points. Masked
// editors with a reference mask only recolor points that win a masked pixel
// in the reference view.
PointScene oracle_edit_scene(const PointScene& scene, const ToyEditor& editor, const Camera* reference = nullptr,
                             const EditMask* reference_mask = nullptr);

}  // namespace vip3de
