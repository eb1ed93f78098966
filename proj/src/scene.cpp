#include "splatstyle/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "splatstyle/io.hpp"
#include "splatstyle/rng.hpp"

namespace splatstyle {

namespace {

using vec3 = std::array<double, 3>;

vec3 sub3(const vec3& a, const vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
double dot3(const vec3& a, const vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
vec3 cross3(const vec3& a, const vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
double norm3(const vec3& a) { return std::sqrt(dot3(a, a)); }
vec3 normalize3(const vec3& a) {
    const double n = norm3(a);
    return {a[0] / n, a[1] / n, a[2] / n};
}

void hash_bytes(std::uint64_t& h, const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
}

} // namespace

void CameraPose::validate() const {
    if (!(focal > 0.0)) throw std::invalid_argument("camera: focal must be positive");
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("camera: width and height must be positive");
    const vec3 forward = sub3(look_at, position);
    if (norm3(forward) < 1e-12)
        throw std::invalid_argument("camera: look_at coincides with position");
    const vec3 f = normalize3(forward);
    const vec3 u = normalize3(up);
    if (norm3(cross3(f, u)) < 1e-9)
        throw std::invalid_argument("camera: up vector is parallel to the view direction");
}

std::uint64_t GaussianScene::geometry_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    hash_bytes(h, positions.data(), positions.size() * sizeof(vec3));
    hash_bytes(h, opacities.data(), opacities.size() * sizeof(double));
    hash_bytes(h, radii.data(), radii.size() * sizeof(double));
    hash_bytes(h, &sh_degree, sizeof(sh_degree));
    for (const auto& cam : cameras) {
        hash_bytes(h, cam.position.data(), sizeof(vec3));
        hash_bytes(h, cam.look_at.data(), sizeof(vec3));
        hash_bytes(h, cam.up.data(), sizeof(vec3));
        hash_bytes(h, &cam.focal, sizeof(double));
        hash_bytes(h, &cam.width, sizeof(int));
        hash_bytes(h, &cam.height, sizeof(int));
    }
    return h;
}

void GaussianScene::validate() const {
    const std::size_t m = positions.size();
    if (m == 0) throw std::invalid_argument("scene: no gaussians");
    if (opacities.size() != m || radii.size() != m)
        throw std::invalid_argument("scene: opacity/radius count mismatch");
    if (sh_degree < 0 || sh_degree > 3)
        throw std::invalid_argument("scene: sh_degree must be in {0,1,2,3}");
    if (sh_coeffs.size() != m * static_cast<std::size_t>(basis()) * 3)
        throw std::invalid_argument("scene: sh_coeffs size mismatch");
    for (std::size_t i = 0; i < m; ++i) {
        if (!(opacities[i] > 0.0 && opacities[i] <= 1.0))
            throw std::invalid_argument("scene: opacity " + std::to_string(i) + " outside (0,1]");
        if (!(radii[i] > 0.0))
            throw std::invalid_argument("scene: radius " + std::to_string(i) + " not positive");
    }
    if (cameras.empty()) throw std::invalid_argument("scene: no cameras");
    for (const auto& cam : cameras) cam.validate();
}

SplatWeights bake_weights(const GaussianScene& scene, int camera_index) {
    if (camera_index < 0 || camera_index >= static_cast<int>(scene.cameras.size()))
        throw std::invalid_argument("bake_weights: camera index out of range");
    const CameraPose& cam = scene.cameras[camera_index];
    cam.validate();

    const int m = scene.count();
    const int hpx = cam.height;
    const int wpx = cam.width;
    const std::size_t npix = static_cast<std::size_t>(hpx) * wpx;

    const vec3 f = normalize3(sub3(cam.look_at, cam.position));
    const vec3 r = normalize3(cross3(f, cam.up));
    const vec3 u = cross3(r, f);
    const double cx = 0.5 * (wpx - 1);
    const double cy = 0.5 * (hpx - 1);

    SplatWeights out;
    out.camera_index = camera_index;
    out.height = hpx;
    out.width = wpx;
    out.scene_hash = scene.geometry_hash();

    // View directions and SH basis per gaussian, fixed for this camera.
    const int basis = scene.basis();
    out.sh_basis.resize(static_cast<std::size_t>(m) * basis);
    for (int j = 0; j < m; ++j) {
        vec3 d = sub3(scene.positions[j], cam.position);
        const double n = norm3(d);
        if (n < 1e-12) d = {0.0, 0.0, 1.0};
        else d = {d[0] / n, d[1] / n, d[2] / n};
        sh_eval_into(d[0], d[1], d[2], scene.sh_degree, out.sh_basis.data() + static_cast<std::size_t>(j) * basis);
    }

    // Project and depth-sort (stable tie-break by index).
    struct Proj {
        int j;
        double depth, px, py, sigma;
    };
    std::vector<Proj> projected;
    projected.reserve(m);
    for (int j = 0; j < m; ++j) {
        const vec3 d = sub3(scene.positions[j], cam.position);
        const double depth = dot3(d, f);
        if (depth <= 1e-8) continue; // behind or at the camera plane
        const double px = cam.focal * dot3(d, r) / depth + cx;
        const double py = cy - cam.focal * dot3(d, u) / depth;
        const double sigma = cam.focal * scene.radii[j] / depth;
        projected.push_back({j, depth, px, py, sigma});
    }
    std::stable_sort(projected.begin(), projected.end(),
                     [](const Proj& a, const Proj& b) { return a.depth < b.depth; });

    // Front-to-back compositing; per-pixel lists come out depth-ordered
    // because gaussians are visited in global depth order.
    std::vector<double> transmittance(npix, 1.0);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> per_pixel(npix);
    for (const Proj& p : projected) {
        const double support = 3.0 * p.sigma;
        const int x0 = std::max(0, static_cast<int>(std::floor(p.px - support)));
        const int x1 = std::min(wpx - 1, static_cast<int>(std::ceil(p.px + support)));
        const int y0 = std::max(0, static_cast<int>(std::floor(p.py - support)));
        const int y1 = std::min(hpx - 1, static_cast<int>(std::ceil(p.py + support)));
        if (x1 < x0 || y1 < y0) continue;
        const double inv2s2 = 1.0 / (2.0 * p.sigma * p.sigma);
        const double alpha = scene.opacities[p.j];
        for (int y = y0; y <= y1; ++y) {
            const double dy = y - p.py;
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - p.px;
                const double d2 = dx * dx + dy * dy;
                if (d2 > support * support) continue;
                const double a = alpha * std::exp(-d2 * inv2s2);
                if (a < 1e-14) continue;
                const std::size_t pix = static_cast<std::size_t>(y) * wpx + x;
                const double w = a * transmittance[pix];
                per_pixel[pix].emplace_back(static_cast<std::uint32_t>(p.j), w);
                transmittance[pix] *= 1.0 - a;
            }
        }
    }

    out.offsets.resize(npix + 1);
    out.offsets[0] = 0;
    for (std::size_t i = 0; i < npix; ++i)
        out.offsets[i + 1] = out.offsets[i] + static_cast<std::uint32_t>(per_pixel[i].size());
    out.gauss_index.resize(out.offsets[npix]);
    out.weight.resize(out.offsets[npix]);
    std::size_t k = 0;
    for (std::size_t i = 0; i < npix; ++i)
        for (const auto& [j, w] : per_pixel[i]) {
            out.gauss_index[k] = j;
            out.weight[k] = w;
            ++k;
        }
    out.transmittance = std::move(transmittance);
    return out;
}

namespace {

void check_weights(const GaussianScene& scene, const SplatWeights& weights, const char* where) {
    if (weights.camera_index < 0 || weights.camera_index >= static_cast<int>(scene.cameras.size()))
        throw std::invalid_argument(std::string(where) + ": weights reference camera " +
                                    std::to_string(weights.camera_index));
    if (weights.scene_hash != scene.geometry_hash())
        throw std::runtime_error(std::string(where) +
                                 ": stale weights (scene geometry hash mismatch)");
    const CameraPose& cam = scene.cameras[weights.camera_index];
    if (weights.height != cam.height || weights.width != cam.width)
        throw std::invalid_argument(std::string(where) + ": weights resolution mismatch");
}

} // namespace

Image render(const GaussianScene& scene, const SplatWeights& weights) {
    check_weights(scene, weights, "render");
    const int m = scene.count();
    const int basis = scene.basis();

    // Per-gaussian color for this camera: sum_b sh[j,b,:] * Y[j,b].
    std::vector<double> colors(static_cast<std::size_t>(m) * 3, 0.0);
    for (int j = 0; j < m; ++j) {
        const double* y = weights.sh_basis.data() + static_cast<std::size_t>(j) * basis;
        for (int c = 0; c < 3; ++c) {
            double acc = 0.0;
            for (int b = 0; b < basis; ++b) acc += scene.sh_coeffs[scene.coeff_index(j, b, c)] * y[b];
            colors[static_cast<std::size_t>(j) * 3 + c] = acc;
        }
    }

    Image out(3, weights.height, weights.width);
    const std::size_t npix = static_cast<std::size_t>(weights.height) * weights.width;
    for (std::size_t pix = 0; pix < npix; ++pix) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (std::uint32_t e = weights.offsets[pix]; e < weights.offsets[pix + 1]; ++e) {
            const double w = weights.weight[e];
            const double* col = colors.data() + static_cast<std::size_t>(weights.gauss_index[e]) * 3;
            acc[0] += w * col[0];
            acc[1] += w * col[1];
            acc[2] += w * col[2];
        }
        const double t = weights.transmittance[pix];
        for (int c = 0; c < 3; ++c) out.data[c * npix + pix] = acc[c] + t * scene.background[c];
    }
    return out;
}

std::vector<double> render_vjp(const GaussianScene& scene, const SplatWeights& weights,
                               const Image& cotangent) {
    check_weights(scene, weights, "render_vjp");
    if (cotangent.channels != 3 || cotangent.height != weights.height ||
        cotangent.width != weights.width)
        throw std::invalid_argument("render_vjp: cotangent shape mismatch");

    const int m = scene.count();
    const int basis = scene.basis();
    const std::size_t npix = static_cast<std::size_t>(weights.height) * weights.width;

    // Accumulate per-gaussian color cotangents, then expand through the SH
    // basis: exact transpose of render's two linear stages.
    std::vector<double> color_bar(static_cast<std::size_t>(m) * 3, 0.0);
    for (std::size_t pix = 0; pix < npix; ++pix) {
        const double cot0 = cotangent.data[0 * npix + pix];
        const double cot1 = cotangent.data[1 * npix + pix];
        const double cot2 = cotangent.data[2 * npix + pix];
        for (std::uint32_t e = weights.offsets[pix]; e < weights.offsets[pix + 1]; ++e) {
            const double w = weights.weight[e];
            double* cb = color_bar.data() + static_cast<std::size_t>(weights.gauss_index[e]) * 3;
            cb[0] += w * cot0;
            cb[1] += w * cot1;
            cb[2] += w * cot2;
        }
    }

    std::vector<double> grad(static_cast<std::size_t>(m) * basis * 3, 0.0);
    for (int j = 0; j < m; ++j) {
        const double* y = weights.sh_basis.data() + static_cast<std::size_t>(j) * basis;
        const double* cb = color_bar.data() + static_cast<std::size_t>(j) * 3;
        for (int b = 0; b < basis; ++b)
            for (int c = 0; c < 3; ++c)
                grad[(static_cast<std::size_t>(j) * basis + b) * 3 + c] = y[b] * cb[c];
    }
    return grad;
}

std::pair<GaussianScene, std::vector<SplatWeights>> make_synthetic_scene(
    std::uint64_t seed, int n_gaussians, int n_cameras, int height, int width, int sh_degree) {
    if (n_gaussians < 1) throw std::invalid_argument("make_synthetic_scene: need n_gaussians >= 1");
    if (n_cameras < 1) throw std::invalid_argument("make_synthetic_scene: need n_cameras >= 1");
    if (height < 1 || width < 1)
        throw std::invalid_argument("make_synthetic_scene: resolution must be positive");
    if (sh_degree < 0 || sh_degree > 3)
        throw std::invalid_argument("make_synthetic_scene: sh_degree must be in {0,1,2,3}");

    RandomStream rng = SeedSplitter(seed).stream("scene");
    GaussianScene scene;
    scene.sh_degree = sh_degree;
    scene.positions.resize(n_gaussians);
    scene.opacities.resize(n_gaussians);
    scene.radii.resize(n_gaussians);
    const int basis = scene.basis();
    scene.sh_coeffs.assign(static_cast<std::size_t>(n_gaussians) * basis * 3, 0.0);

    constexpr double kDcNorm = 0.28209479177387814;
    for (int j = 0; j < n_gaussians; ++j) {
        for (int a = 0; a < 3; ++a) scene.positions[j][a] = rng.next_double() - 0.5;
        scene.radii[j] = 0.04 + 0.08 * rng.next_double();
        scene.opacities[j] = 0.3 + 0.65 * rng.next_double();
        for (int c = 0; c < 3; ++c) {
            const double rgb = 0.25 + 0.5 * rng.next_double();
            scene.sh_coeffs[scene.coeff_index(j, 0, c)] = rgb / kDcNorm;
        }
    }

    const double ring_radius = 2.2;
    const double ring_height = 0.35;
    scene.cameras.resize(n_cameras);
    for (int i = 0; i < n_cameras; ++i) {
        const double angle = 2.0 * M_PI * i / n_cameras;
        CameraPose cam;
        cam.position = {ring_radius * std::cos(angle), ring_height, ring_radius * std::sin(angle)};
        cam.look_at = {0.0, 0.0, 0.0};
        cam.up = {0.0, 1.0, 0.0};
        cam.focal = 1.2 * width;
        cam.width = width;
        cam.height = height;
        scene.cameras[i] = cam;
    }
    scene.validate();
    return {scene, bake_all(scene)};
}

std::vector<SplatWeights> bake_all(const GaussianScene& scene) {
    std::vector<SplatWeights> out;
    out.reserve(scene.cameras.size());
    for (int i = 0; i < static_cast<int>(scene.cameras.size()); ++i)
        out.push_back(bake_weights(scene, i));
    return out;
}

MultiViewLatent render_all(const GaussianScene& scene, const std::vector<SplatWeights>& weights) {
    std::vector<Image> images;
    images.reserve(weights.size());
    for (const auto& w : weights) images.push_back(render(scene, w));
    return stack_views(images);
}

void save_scene(const GaussianScene& scene, const std::string& path) {
    scene.validate();
    nlohmann::json header;
    header["format"] = "splatstyle-scene";
    header["version"] = 1;
    header["gaussians"] = scene.count();
    header["sh_degree"] = scene.sh_degree;
    header["background"] = scene.background;
    nlohmann::json cams = nlohmann::json::array();
    for (const auto& cam : scene.cameras) {
        cams.push_back({{"position", cam.position},
                        {"look_at", cam.look_at},
                        {"up", cam.up},
                        {"focal", cam.focal},
                        {"width", cam.width},
                        {"height", cam.height}});
    }
    header["cameras"] = cams;
    const std::string htext = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_scene: cannot open " + path);
    const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
    const unsigned char lenb[4] = {static_cast<unsigned char>(hlen & 0xff),
                                   static_cast<unsigned char>((hlen >> 8) & 0xff),
                                   static_cast<unsigned char>((hlen >> 16) & 0xff),
                                   static_cast<unsigned char>((hlen >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(lenb), 4);
    out.write(htext.data(), static_cast<std::streamsize>(htext.size()));

    const std::uint32_t m = static_cast<std::uint32_t>(scene.count());
    write_tensor_block(out, {m, 3}, &scene.positions[0][0]);
    write_tensor_block(out, {m}, scene.opacities.data());
    write_tensor_block(out, {m}, scene.radii.data());
    write_tensor_block(out, {m, static_cast<std::uint32_t>(scene.basis()), 3},
                       scene.sh_coeffs.data());
    if (!out) throw std::runtime_error("save_scene: write failed for " + path);
}

GaussianScene load_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_scene: cannot open " + path);
    unsigned char lenb[4];
    in.read(reinterpret_cast<char*>(lenb), 4);
    if (!in) throw std::runtime_error("load_scene: truncated header length");
    const std::uint32_t hlen = static_cast<std::uint32_t>(lenb[0]) |
                               (static_cast<std::uint32_t>(lenb[1]) << 8) |
                               (static_cast<std::uint32_t>(lenb[2]) << 16) |
                               (static_cast<std::uint32_t>(lenb[3]) << 24);
    if (hlen == 0 || hlen > (1u << 24)) throw std::runtime_error("load_scene: bad header length");
    std::string htext(hlen, '\0');
    in.read(htext.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error("load_scene: truncated header");

    nlohmann::json header = nlohmann::json::parse(htext, nullptr, false);
    if (header.is_discarded()) throw std::runtime_error("load_scene: header is not valid JSON");
    if (header.value("format", "") != "splatstyle-scene")
        throw std::runtime_error("load_scene: not a scene file");
    if (header.value("version", 0) != 1)
        throw std::runtime_error("load_scene: unsupported scene version");

    GaussianScene scene;
    scene.sh_degree = header.at("sh_degree").get<int>();
    scene.background = header.at("background").get<std::array<double, 3>>();
    for (const auto& jc : header.at("cameras")) {
        CameraPose cam;
        cam.position = jc.at("position").get<vec3>();
        cam.look_at = jc.at("look_at").get<vec3>();
        cam.up = jc.at("up").get<vec3>();
        cam.focal = jc.at("focal").get<double>();
        cam.width = jc.at("width").get<int>();
        cam.height = jc.at("height").get<int>();
        scene.cameras.push_back(cam);
    }
    const int m = header.at("gaussians").get<int>();
    if (m < 1) throw std::runtime_error("load_scene: gaussian count must be positive");

    std::vector<std::uint32_t> dims;
    std::vector<double> data;
    read_tensor_block(in, dims, data);
    if (dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(m), 3})
        throw std::runtime_error("load_scene: unexpected positions block shape");
    scene.positions.resize(m);
    for (int j = 0; j < m; ++j)
        scene.positions[j] = {data[3 * j], data[3 * j + 1], data[3 * j + 2]};

    read_tensor_block(in, dims, data);
    if (dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(m)})
        throw std::runtime_error("load_scene: unexpected opacities block shape");
    scene.opacities = data;

    read_tensor_block(in, dims, data);
    if (dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(m)})
        throw std::runtime_error("load_scene: unexpected radii block shape");
    scene.radii = data;

    read_tensor_block(in, dims, data);
    if (dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(m),
                                           static_cast<std::uint32_t>(scene.basis()), 3})
        throw std::runtime_error("load_scene: unexpected sh_coeffs block shape");
    scene.sh_coeffs = data;

    scene.validate();
    return scene;
}

std::vector<std::uint8_t> geometry_bytes(const GaussianScene& scene) {
    if (scene.count() == 0) return {};
    std::ostringstream out(std::ios::binary);
    const std::uint32_t m = static_cast<std::uint32_t>(scene.count());
    write_tensor_block(out, {m, 3}, &scene.positions[0][0]);
    write_tensor_block(out, {m}, scene.opacities.data());
    write_tensor_block(out, {m}, scene.radii.data());
    const std::string s = out.str();
    return std::vector<std::uint8_t>(s.begin(), s.end());
}

} // namespace splatstyle
