#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "splatstyle/sh.hpp"
#include "splatstyle/tensor.hpp"

namespace splatstyle {

struct CameraPose {
    std::array<double, 3> position{};
    std::array<double, 3> look_at{};
    std::array<double, 3> up{0.0, 1.0, 0.0};
    double focal = 0.0; // pixels
    int width = 0;
    int height = 0;

    void validate() const;
};

// Fixed-geometry isotropic splat scene. Geometry (positions, opacities,
// radii, cameras) is frozen after load; sh_coeffs is the only optimizable
// block.
struct GaussianScene {
    std::vector<std::array<double, 3>> positions;
    std::vector<double> opacities; // in (0,1]
    std::vector<double> radii;     // world units, isotropic
    int sh_degree = 3;
    std::vector<double> sh_coeffs; // [M, B, 3], B = (sh_degree+1)^2
    std::vector<CameraPose> cameras;
    std::array<double, 3> background{0.5, 0.5, 0.5};

    int count() const { return static_cast<int>(positions.size()); }
    int basis() const { return sh_basis_size(sh_degree); }
    std::size_t coeff_index(int g, int b, int c) const {
        return (static_cast<std::size_t>(g) * basis() + b) * 3 + c;
    }
    // Hash over the frozen geometry fields; used to detect stale weights.
    std::uint64_t geometry_hash() const;
    void validate() const;
};

// Per-pixel depth-ordered (gaussian, composited weight) lists plus the
// per-gaussian SH basis values for this camera's view directions. Splat
// support is truncated at 3 screen sigmas. Immutable once baked;
// deterministic given scene + camera.
struct SplatWeights {
    int camera_index = -1;
    int height = 0;
    int width = 0;
    std::uint64_t scene_hash = 0;
    std::vector<std::uint32_t> offsets;     // H*W+1 prefix offsets into entries
    std::vector<std::uint32_t> gauss_index; // entry -> gaussian
    std::vector<double> weight;             // entry -> composited weight in [0,1]
    std::vector<double> transmittance;      // H*W residual after compositing
    std::vector<double> sh_basis;           // [M, B] for this camera
};

SplatWeights bake_weights(const GaussianScene& scene, int camera_index);

// pixel = sum_j w_j * (sum_b sh[j,b,:] * Y_b) + (1 - sum_j w_j) * background.
// Exactly linear in sh_coeffs; no clamping.
Image render(const GaussianScene& scene, const SplatWeights& weights);

// Exact transpose of the linear render map, restricted to sh_coeffs.
// Returns a gradient of size M*B*3.
std::vector<double> render_vjp(const GaussianScene& scene, const SplatWeights& weights,
                               const Image& cotangent);

// Gaussians uniform in the unit box, cameras on a circle looking at the
// origin, deterministic under seed. DC color coefficients are randomized,
// higher degrees start at zero.
std::pair<GaussianScene, std::vector<SplatWeights>> make_synthetic_scene(
    std::uint64_t seed, int n_gaussians, int n_cameras, int height, int width, int sh_degree = 3);

std::vector<SplatWeights> bake_all(const GaussianScene& scene);
MultiViewLatent render_all(const GaussianScene& scene, const std::vector<SplatWeights>& weights);

// Scene container: u32 header length + JSON header (counts, SH degree,
// cameras, background) followed by tensor blocks for positions, opacities,
// radii and sh_coeffs, in that order.
void save_scene(const GaussianScene& scene, const std::string& path);
GaussianScene load_scene(const std::string& path);

// Byte-identical serialization of the frozen geometry fields only.
std::vector<std::uint8_t> geometry_bytes(const GaussianScene& scene);

} // namespace splatstyle
