#include "splatstyle/tensor.hpp"

#include <algorithm>
#include <cstring>

namespace splatstyle {

namespace {

std::size_t checked_volume(int a, int b, int c, int d, const char* where) {
    if (a <= 0 || b <= 0 || c <= 0 || d <= 0) {
        throw std::invalid_argument(std::string(where) + ": all dimensions must be positive, got [" +
                                    std::to_string(a) + "," + std::to_string(b) + "," +
                                    std::to_string(c) + "," + std::to_string(d) + "]");
    }
    return static_cast<std::size_t>(a) * b * c * d;
}

} // namespace

Image::Image(int c, int h, int w, double fill)
    : channels(c), height(h), width(w),
      data(checked_volume(1, c, h, w, "Image"), fill) {}

MultiViewLatent::MultiViewLatent(int n, int c, int h, int w, double fill)
    : n_views(n), channels(c), height(h), width(w),
      data(checked_volume(n, c, h, w, "MultiViewLatent"), fill) {}

std::string MultiViewLatent::shape_str() const {
    return "[" + std::to_string(n_views) + "," + std::to_string(channels) + "," +
           std::to_string(height) + "," + std::to_string(width) + "]";
}

bool MultiViewLatent::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

LatentPair::LatentPair(MultiViewLatent src, MultiViewLatent tgt)
    : source(std::move(src)), target(std::move(tgt)) {
    if (!source.same_shape(target)) {
        throw std::invalid_argument("LatentPair: source shape " + source.shape_str() +
                                    " != target shape " + target.shape_str());
    }
}

MultiViewLatent stack_views(const std::vector<Image>& images) {
    if (images.empty()) throw std::invalid_argument("stack_views: empty image list");
    const Image& first = images.front();
    for (std::size_t i = 1; i < images.size(); ++i) {
        const Image& im = images[i];
        if (im.channels != first.channels || im.height != first.height || im.width != first.width) {
            throw std::invalid_argument("stack_views: image " + std::to_string(i) +
                                        " has mismatched shape");
        }
    }
    MultiViewLatent out(static_cast<int>(images.size()), first.channels, first.height, first.width);
    const std::size_t per_view = first.size();
    for (std::size_t i = 0; i < images.size(); ++i)
        std::copy(images[i].data.begin(), images[i].data.end(), out.data.begin() + i * per_view);
    return out;
}

std::vector<Image> unstack(const MultiViewLatent& stack) {
    std::vector<Image> out;
    out.reserve(stack.n_views);
    const std::size_t per_view = static_cast<std::size_t>(stack.channels) * stack.height * stack.width;
    for (int i = 0; i < stack.n_views; ++i) {
        Image im(stack.channels, stack.height, stack.width);
        std::copy(stack.data.begin() + i * per_view, stack.data.begin() + (i + 1) * per_view,
                  im.data.begin());
        out.push_back(std::move(im));
    }
    return out;
}

MultiViewLatent replicate_view(const Image& slice, int n_views) {
    if (n_views <= 0) throw std::invalid_argument("replicate_view: n_views must be positive");
    MultiViewLatent out(n_views, slice.channels, slice.height, slice.width);
    for (int i = 0; i < n_views; ++i)
        std::copy(slice.data.begin(), slice.data.end(), out.data.begin() + i * slice.size());
    return out;
}

bool is_view_constant(const MultiViewLatent& stack) {
    const std::size_t per_view = static_cast<std::size_t>(stack.channels) * stack.height * stack.width;
    for (int i = 1; i < stack.n_views; ++i) {
        if (std::memcmp(stack.data.data(), stack.data.data() + i * per_view,
                        per_view * sizeof(double)) != 0)
            return false;
    }
    return true;
}

void require_same_shape(const MultiViewLatent& a, const MultiViewLatent& b, const char* where) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(where) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
    }
}

MultiViewLatent add(const MultiViewLatent& a, const MultiViewLatent& b) {
    require_same_shape(a, b, "add");
    MultiViewLatent out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

MultiViewLatent sub(const MultiViewLatent& a, const MultiViewLatent& b) {
    require_same_shape(a, b, "sub");
    MultiViewLatent out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

MultiViewLatent scale(const MultiViewLatent& a, double s) {
    MultiViewLatent out = a;
    for (double& v : out.data) v *= s;
    return out;
}

MultiViewLatent axpy(const MultiViewLatent& a, double s, const MultiViewLatent& b) {
    require_same_shape(a, b, "axpy");
    MultiViewLatent out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += s * b.data[i];
    return out;
}

double max_abs(const MultiViewLatent& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

double l2_norm(const MultiViewLatent& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double mean(const MultiViewLatent& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s / static_cast<double>(a.data.size());
}

double rmse(const Image& a, const Image& b) {
    if (a.channels != b.channels || a.height != b.height || a.width != b.width)
        throw std::invalid_argument("rmse: image shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(a.data.size()));
}

double rmse_views(const MultiViewLatent& stack, int view_a, int view_b) {
    if (view_a < 0 || view_a >= stack.n_views || view_b < 0 || view_b >= stack.n_views)
        throw std::invalid_argument("rmse_views: view index out of range");
    const std::size_t per_view = static_cast<std::size_t>(stack.channels) * stack.height * stack.width;
    const double* pa = stack.data.data() + view_a * per_view;
    const double* pb = stack.data.data() + view_b * per_view;
    double s = 0.0;
    for (std::size_t i = 0; i < per_view; ++i) {
        const double d = pa[i] - pb[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(per_view));
}

} // namespace splatstyle
