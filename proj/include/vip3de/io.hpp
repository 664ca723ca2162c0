#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vip3de/camera.hpp"
#include "vip3de/correspondence.hpp"
#include "vip3de/latent.hpp"
#include "vip3de/scene.hpp"
#include "vip3de/trajectory.hpp"

namespace vip3de {

namespace fs = std::filesystem;

// `pointscene v1 <count>` then `x y z r g b radius` per point.
void write_scene(const fs::path& path, const PointScene& scene);
PointScene read_scene(const fs::path& path);

// One camera per line: fx fy cx cy w h r00..r22 tx ty tz.
std::string format_camera(const Camera& camera);
Camera parse_camera(const std::string& line);
void write_cameras(const fs::path& path, const std::vector<Camera>& cameras);
std::vector<Camera> read_cameras(const fs::path& path);

// Camera lines preceded by `trajectory v1 <count> keys:<i0,i1,...>`. Reading a
// plain camera file treats every camera as a key.
void write_trajectory(const fs::path& path, const CameraPath& path_data);
CameraPath read_trajectory(const fs::path& path);

// 8-bit rgb PNG; values are clamped to [0,1] and rounded.
void write_png(const fs::path& path, const Image& image);
Image read_png(const fs::path& path);
// Non-zero pixels (any channel) are inside the mask.
EditMask read_mask_png(const fs::path& path);
void write_mask_png(const fs::path& path, const EditMask& mask);

// Little-endian float32, row-major; misses are +inf.
void write_depth(const fs::path& path, const DepthMap& depth);
DepthMap read_depth(const fs::path& path, int width, int height);

// "LATV", then frames, channels, height, width as little-endian u32, then float32 values.
void write_latent(const fs::path& path, const LatentVideo& latent);
LatentVideo read_latent(const fs::path& path);

void write_correspondence(const fs::path& path, const CorrespondenceMap& map);

// Writes the whole string; creates parent directories.
void write_text(const fs::path& path, const std::string& text);

}  // namespace vip3de
