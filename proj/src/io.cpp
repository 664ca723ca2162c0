#include "vip3de/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace vip3de {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::ifstream open_in(const fs::path& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw InvalidArgument("cannot read file: " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    return out;
}

void fail_parse(const fs::path& path, int line, const std::string& what) {
    throw InvalidArgument(path.string() + ":" + std::to_string(line) + ": " + what);
}

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

unsigned char to_byte(double v) {
    if (!(v > 0.0)) return 0;
    if (v >= 1.0) return 255;
    return static_cast<unsigned char>(std::lround(v * 255.0));
}

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

}  // namespace

void write_scene(const fs::path& path, const PointScene& scene) {
    auto out = open_out(path);
    out << "pointscene v1 " << scene.size() << "\n" << std::setprecision(9);
    for (const auto& p : scene.points) {
        out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << p.color.x() << ' '
            << p.color.y() << ' ' << p.color.z() << ' ' << p.radius << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

PointScene read_scene(const fs::path& path) {
    auto in = open_in(path);
    std::string magic, version;
    long long count = -1;
    std::string header;
    std::getline(in, header);
    std::istringstream hs(header);
    if (!(hs >> magic >> version >> count) || magic != "pointscene" || version != "v1" || count < 0) {
        fail_parse(path, 1, "expected header 'pointscene v1 <count>'");
    }
    PointScene scene;
    scene.points.reserve(static_cast<size_t>(count));
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        ScenePoint p;
        double v[7];
        for (double& x : v) {
            if (!(ls >> x)) fail_parse(path, lineno, "expected 7 numbers");
        }
        std::string extra;
        if (ls >> extra) fail_parse(path, lineno, "trailing data");
        p.position = {v[0], v[1], v[2]};
        p.color = {v[3], v[4], v[5]};
        p.radius = v[6];
        scene.points.push_back(p);
    }
    if (static_cast<long long>(scene.size()) != count) {
        fail_parse(path, lineno, "header says " + std::to_string(count) + " points, found " +
                                     std::to_string(scene.size()));
    }
    scene.validate();
    return scene;
}

std::string format_camera(const Camera& c) {
    std::ostringstream s;
    s << std::setprecision(17) << c.fx() << ' ' << c.fy() << ' ' << c.cx() << ' ' << c.cy() << ' ' << c.width << ' '
      << c.height;
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) s << ' ' << c.R(r, k);
    }
    s << ' ' << c.t.x() << ' ' << c.t.y() << ' ' << c.t.z();
    return s.str();
}

Camera parse_camera(const std::string& line) {
    std::istringstream s(line);
    double fx, fy, cx, cy;
    int w, h;
    if (!(s >> fx >> fy >> cx >> cy >> w >> h)) throw InvalidArgument("camera line: expected intrinsics and size");
    Camera c = Camera::from_intrinsics(fx, fy, cx, cy, w, h);
    for (int r = 0; r < 3; ++r) {
        for (int k = 0; k < 3; ++k) {
            if (!(s >> c.R(r, k))) throw InvalidArgument("camera line: expected 9 rotation entries");
        }
    }
    if (!(s >> c.t.x() >> c.t.y() >> c.t.z())) throw InvalidArgument("camera line: expected translation");
    std::string extra;
    if (s >> extra) throw InvalidArgument("camera line: trailing data");
    c.validate();
    return c;
}

void write_cameras(const fs::path& path, const std::vector<Camera>& cameras) {
    auto out = open_out(path);
    for (const auto& c : cameras) out << format_camera(c) << "\n";
}

namespace {

std::vector<Camera> parse_camera_lines(std::istream& in, const fs::path& path, int lineno) {
    std::vector<Camera> cams;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            cams.push_back(parse_camera(line));
        } catch (const InvalidArgument& e) {
            fail_parse(path, lineno, e.what());
        }
    }
    return cams;
}

}  // namespace

std::vector<Camera> read_cameras(const fs::path& path) {
    auto in = open_in(path);
    return parse_camera_lines(in, path, 0);
}

void write_trajectory(const fs::path& path, const CameraPath& traj) {
    auto out = open_out(path);
    out << "trajectory v1 " << traj.size() << " keys:";
    for (size_t i = 0; i < traj.key_indices.size(); ++i) out << (i ? "," : "") << traj.key_indices[i];
    out << "\n";
    for (const auto& c : traj.cameras) out << format_camera(c) << "\n";
}

CameraPath read_trajectory(const fs::path& path) {
    auto in = open_in(path);
    std::string first;
    const auto start = in.tellg();
    std::getline(in, first);
    CameraPath traj;
    if (first.rfind("trajectory", 0) == 0) {
        std::istringstream hs(first);
        std::string magic, version, keys;
        long long count = -1;
        if (!(hs >> magic >> version >> count >> keys) || version != "v1" || keys.rfind("keys:", 0) != 0) {
            fail_parse(path, 1, "expected header 'trajectory v1 <count> keys:<list>'");
        }
        std::istringstream ks(keys.substr(5));
        std::string item;
        while (std::getline(ks, item, ',')) {
            try {
                traj.key_indices.push_back(std::stoi(item));
            } catch (const std::exception&) {
                fail_parse(path, 1, "bad key index: " + item);
            }
        }
        traj.cameras = parse_camera_lines(in, path, 1);
        if (static_cast<long long>(traj.size()) != count) fail_parse(path, 1, "camera count does not match header");
    } else {
        in.clear();
        in.seekg(start);
        traj.cameras = parse_camera_lines(in, path, 0);
        for (size_t i = 0; i < traj.size(); ++i) traj.key_indices.push_back(static_cast<int>(i));
    }
    return traj;
}

// The caller reports failures after longjmp; libpng's own messages are dropped.
static void png_quiet_error(png_structp png, png_const_charp) { png_longjmp(png, 1); }
static void png_quiet_warning(png_structp, png_const_charp) {}

void write_png(const fs::path& path, const Image& image) {
    if (image.channels != 3) throw InvalidArgument("write_png: expected rgb image");
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    FilePtr f(std::fopen(path.string().c_str(), "wb"));
    if (!f) throw std::runtime_error("cannot write file: " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    std::vector<unsigned char> row(static_cast<size_t>(image.width) * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write failed: " + path.string());
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) row[static_cast<size_t>(3 * x + c)] = to_byte(image.at(x, y, c));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const fs::path& path) {
    FilePtr f(std::fopen(path.string().c_str(), "rb"));
    if (!f) throw InvalidArgument("cannot read file: " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_quiet_error, png_quiet_warning);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    Image image;
    std::vector<unsigned char> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InvalidArgument("not a readable png: " + path.string());
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_gray_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    image = Image(w, h, 3);
    row.resize(png_get_rowbytes(png, info));
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) image.at(x, y, c) = row[static_cast<size_t>(3 * x + c)] / 255.0;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

EditMask read_mask_png(const fs::path& path) {
    const Image img = read_png(path);
    EditMask mask(img.width, img.height);
    for (size_t p = 0; p < img.pixel_count(); ++p) {
        mask.data[p] = (img.data[3 * p] > 0 || img.data[3 * p + 1] > 0 || img.data[3 * p + 2] > 0) ? 1 : 0;
    }
    return mask;
}

void write_mask_png(const fs::path& path, const EditMask& mask) {
    Image img(mask.width, mask.height, 3);
    for (size_t p = 0; p < mask.data.size(); ++p) {
        for (int c = 0; c < 3; ++c) img.data[3 * p + static_cast<size_t>(c)] = mask.data[p] ? 1.0 : 0.0;
    }
    write_png(path, img);
}

void write_depth(const fs::path& path, const DepthMap& depth) {
    auto out = open_out(path, true);
    std::vector<float> buf(depth.data.size());
    for (size_t i = 0; i < buf.size(); ++i) {
        buf[i] = std::isfinite(depth.data[i]) ? static_cast<float>(depth.data[i]) : std::numeric_limits<float>::infinity();
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

DepthMap read_depth(const fs::path& path, int width, int height) {
    auto in = open_in(path, true);
    DepthMap depth(width, height);
    std::vector<float> buf(depth.data.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)) || in.peek() != EOF) {
        throw InvalidArgument("depth file size does not match " + std::to_string(width) + "x" +
                              std::to_string(height) + ": " + path.string());
    }
    for (size_t i = 0; i < buf.size(); ++i) depth.data[i] = buf[i];
    return depth;
}

void write_latent(const fs::path& path, const LatentVideo& latent) {
    auto out = open_out(path, true);
    out.write("LATV", 4);
    for (int v : {latent.frames, latent.channels, latent.height, latent.width}) write_u32(out, static_cast<std::uint32_t>(v));
    std::vector<float> buf(latent.data.begin(), latent.data.end());
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

LatentVideo read_latent(const fs::path& path) {
    auto in = open_in(path, true);
    char magic[4] = {};
    in.read(magic, 4);
    if (std::memcmp(magic, "LATV", 4) != 0) throw InvalidArgument("not a latent file: " + path.string());
    const int n = static_cast<int>(read_u32(in));
    const int c = static_cast<int>(read_u32(in));
    const int h = static_cast<int>(read_u32(in));
    const int w = static_cast<int>(read_u32(in));
    LatentVideo latent(n, c, h, w);
    std::vector<float> buf(latent.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
        throw InvalidArgument("truncated latent file: " + path.string());
    }
    std::copy(buf.begin(), buf.end(), latent.data.begin());
    return latent;
}

void write_correspondence(const fs::path& path, const CorrespondenceMap& map) {
    auto out = open_out(path);
    write_correspondence_dump(out, map);
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

}  // namespace vip3de
