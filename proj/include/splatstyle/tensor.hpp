#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace splatstyle {

// Single [C,H,W] image, row-major, double precision.
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int c, int h, int w, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t index(int c, int h, int w) const {
        return (static_cast<std::size_t>(c) * height + h) * width + w;
    }
    double& at(int c, int h, int w) { return data[index(c, h, w)]; }
    double at(int c, int h, int w) const { return data[index(c, h, w)]; }
};

// Multi-view latent stack [N,C,H,W], row-major, double precision.
// Shape is fixed at construction; operations return new values.
struct MultiViewLatent {
    int n_views = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    MultiViewLatent() = default;
    MultiViewLatent(int n, int c, int h, int w, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * channels + c) * height + h) * width + w;
    }
    double& at(int n, int c, int h, int w) { return data[index(n, c, h, w)]; }
    double at(int n, int c, int h, int w) const { return data[index(n, c, h, w)]; }

    bool same_shape(const MultiViewLatent& other) const {
        return n_views == other.n_views && channels == other.channels &&
               height == other.height && width == other.width;
    }
    std::string shape_str() const;
    bool all_finite() const;
};

// Source/target latent pair; source is the frozen pre-edit render.
struct LatentPair {
    MultiViewLatent source;
    MultiViewLatent target;

    LatentPair(MultiViewLatent src, MultiViewLatent tgt);
};

MultiViewLatent stack_views(const std::vector<Image>& images);
std::vector<Image> unstack(const MultiViewLatent& stack);

// Replicates one [C,H,W] slice across n views (view-constant stack).
MultiViewLatent replicate_view(const Image& slice, int n_views);
bool is_view_constant(const MultiViewLatent& stack);

// Elementwise arithmetic; shapes must match.
MultiViewLatent add(const MultiViewLatent& a, const MultiViewLatent& b);
MultiViewLatent sub(const MultiViewLatent& a, const MultiViewLatent& b);
MultiViewLatent scale(const MultiViewLatent& a, double s);
// a + s*b in place on a copy of a.
MultiViewLatent axpy(const MultiViewLatent& a, double s, const MultiViewLatent& b);

double max_abs(const MultiViewLatent& a);
double l2_norm(const MultiViewLatent& a);
double mean(const MultiViewLatent& a);
double rmse(const Image& a, const Image& b);
double rmse_views(const MultiViewLatent& stack, int view_a, int view_b);

void require_same_shape(const MultiViewLatent& a, const MultiViewLatent& b, const char* where);

} // namespace splatstyle
