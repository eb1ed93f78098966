#include "splatstyle/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace splatstyle {

namespace {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// 1D complex FFT, unnormalized, e^{-2*pi*i*jk/n} convention. Power-of-two
// lengths use iterative Cooley-Tukey; everything else goes through Bluestein.

struct FftPlan {
    std::size_t n = 0;
    bool pow2 = false;
    std::vector<std::size_t> bitrev;
    std::vector<cplx> twiddle; // exp(-2*pi*i*k/n), k < n/2
    // Bluestein pieces
    std::vector<cplx> chirp;   // exp(-i*pi*k^2/n), k < n
    std::vector<cplx> bfft;    // forward FFT of the padded conjugate chirp
    std::shared_ptr<const FftPlan> sub;
};

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void pow2_forward(const FftPlan& plan, cplx* x) {
    const std::size_t n = plan.n;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = plan.bitrev[i];
        if (j > i) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len >> 1;
        const std::size_t step = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx w = plan.twiddle[k * step];
                const cplx t = w * x[i + k + half];
                const cplx u = x[i + k];
                x[i + k] = u + t;
                x[i + k + half] = u - t;
            }
        }
    }
}

std::shared_ptr<const FftPlan> get_plan(std::size_t n);

std::shared_ptr<const FftPlan> build_plan(std::size_t n) {
    auto plan = std::make_shared<FftPlan>();
    plan->n = n;
    plan->pow2 = is_pow2(n);
    if (plan->pow2) {
        plan->bitrev.resize(n);
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            plan->bitrev[i] = r;
        }
        plan->twiddle.resize(std::max<std::size_t>(n / 2, 1));
        for (std::size_t k = 0; k < plan->twiddle.size(); ++k) {
            const double a = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
            plan->twiddle[k] = cplx(std::cos(a), std::sin(a));
        }
        return plan;
    }

    // Bluestein: convolve with the chirp over a power-of-two length m >= 2n-1.
    std::size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    plan->sub = get_plan(m);
    plan->chirp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the chirp angle well conditioned.
        const std::size_t k2 = (k * k) % (2 * n);
        const double a = -M_PI * static_cast<double>(k2) / static_cast<double>(n);
        plan->chirp[k] = cplx(std::cos(a), std::sin(a));
    }
    std::vector<cplx> b(m, cplx(0.0, 0.0));
    b[0] = std::conj(plan->chirp[0]);
    for (std::size_t k = 1; k < n; ++k) {
        b[k] = std::conj(plan->chirp[k]);
        b[m - k] = b[k];
    }
    pow2_forward(*plan->sub, b.data());
    plan->bfft = std::move(b);
    return plan;
}

std::shared_ptr<const FftPlan> get_plan(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::shared_ptr<const FftPlan>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n);
        if (it != cache.end()) return it->second;
    }
    // Built outside the lock: build_plan recurses into get_plan for the
    // Bluestein sub-plan. A duplicate build is harmless.
    auto plan = build_plan(n);
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(n, plan).first->second;
}

void fft_forward(const FftPlan& plan, cplx* x) {
    if (plan.n == 1) return;
    if (plan.pow2) {
        pow2_forward(plan, x);
        return;
    }
    const std::size_t n = plan.n;
    const std::size_t m = plan.sub->n;
    std::vector<cplx> u(m, cplx(0.0, 0.0));
    for (std::size_t k = 0; k < n; ++k) u[k] = x[k] * plan.chirp[k];
    pow2_forward(*plan.sub, u.data());
    for (std::size_t k = 0; k < m; ++k) u[k] *= plan.bfft[k];
    // Inverse pow2 transform via conjugation.
    for (auto& v : u) v = std::conj(v);
    pow2_forward(*plan.sub, u.data());
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k < n; ++k) x[k] = std::conj(u[k]) * inv_m * plan.chirp[k];
}

// Transforms `count` lines of length n at the given stride, in place.
void transform_lines(cplx* base, std::size_t n, std::size_t stride, std::size_t count,
                     std::size_t count_stride) {
    if (n == 1) return;
    auto plan = get_plan(n);
    std::vector<cplx> line(n);
    for (std::size_t i = 0; i < count; ++i) {
        cplx* p = base + i * count_stride;
        if (stride == 1) {
            fft_forward(*plan, p);
        } else {
            for (std::size_t k = 0; k < n; ++k) line[k] = p[k * stride];
            fft_forward(*plan, line.data());
            for (std::size_t k = 0; k < n; ++k) p[k * stride] = line[k];
        }
    }
}

int max_threads() {
    static int cached = [] {
        if (const char* env = std::getenv("FS_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v >= 1) return static_cast<int>(std::min<long>(v, 64));
        }
        return 1;
    }();
    return cached;
}

// Runs fn(i) for i in [0, count); deterministic because work items are
// independent and write disjoint ranges.
template <typename Fn>
void parallel_over(int count, Fn&& fn) {
    const int threads = std::min(max_threads(), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < count; i += threads) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// Forward 3D transform of one channel, in place: W lines, then H, then N.
void fft3_channel(cplx* ch, int n, int h, int w) {
    const std::size_t hw = static_cast<std::size_t>(h) * w;
    // Along W: contiguous rows.
    transform_lines(ch, static_cast<std::size_t>(w), 1, static_cast<std::size_t>(n) * h,
                    static_cast<std::size_t>(w));
    // Along H: stride w, one line per (view, col).
    for (int v = 0; v < n; ++v)
        transform_lines(ch + v * hw, static_cast<std::size_t>(h), static_cast<std::size_t>(w),
                        static_cast<std::size_t>(w), 1);
    // Along N: stride h*w, one line per (row, col).
    transform_lines(ch, static_cast<std::size_t>(n), hw, hw, 1);
}

} // namespace

Spectrum fft3(const MultiViewLatent& x) {
    Spectrum s;
    s.n_views = x.n_views;
    s.channels = x.channels;
    s.height = x.height;
    s.width = x.width;
    s.data.resize(x.size());
    const std::size_t per_channel = static_cast<std::size_t>(x.height) * x.width;
    const std::size_t view_stride = static_cast<std::size_t>(x.channels) * per_channel;

    parallel_over(x.channels, [&](int c) {
        std::vector<cplx> ch(static_cast<std::size_t>(x.n_views) * per_channel);
        for (int v = 0; v < x.n_views; ++v) {
            const double* src = x.data.data() + v * view_stride + c * per_channel;
            for (std::size_t i = 0; i < per_channel; ++i)
                ch[v * per_channel + i] = cplx(src[i], 0.0);
        }
        fft3_channel(ch.data(), x.n_views, x.height, x.width);
        for (int v = 0; v < x.n_views; ++v) {
            cplx* dst = s.data.data() + v * view_stride + c * per_channel;
            for (std::size_t i = 0; i < per_channel; ++i) dst[i] = ch[v * per_channel + i];
        }
    });
    return s;
}

MultiViewLatent ifft3(const Spectrum& s) {
    MultiViewLatent out(s.n_views, s.channels, s.height, s.width);
    const std::size_t per_channel = static_cast<std::size_t>(s.height) * s.width;
    const std::size_t view_stride = static_cast<std::size_t>(s.channels) * per_channel;
    const double norm =
        1.0 / (static_cast<double>(s.n_views) * s.height * s.width);

    std::vector<double> worst(s.channels, 0.0);
    parallel_over(s.channels, [&](int c) {
        std::vector<cplx> ch(static_cast<std::size_t>(s.n_views) * per_channel);
        for (int v = 0; v < s.n_views; ++v) {
            const cplx* src = s.data.data() + v * view_stride + c * per_channel;
            for (std::size_t i = 0; i < per_channel; ++i)
                ch[v * per_channel + i] = std::conj(src[i]);
        }
        fft3_channel(ch.data(), s.n_views, s.height, s.width);
        double resid = 0.0;
        for (int v = 0; v < s.n_views; ++v) {
            double* dst = out.data.data() + v * view_stride + c * per_channel;
            for (std::size_t i = 0; i < per_channel; ++i) {
                const cplx z = std::conj(ch[v * per_channel + i]) * norm;
                dst[i] = z.real();
                resid = std::max(resid, std::abs(z.imag()));
            }
        }
        worst[c] = resid;
    });
    const double resid = *std::max_element(worst.begin(), worst.end());
    if (resid > 1e-9)
        throw std::runtime_error("ifft3: residual imaginary part " + std::to_string(resid) +
                                 " exceeds 1e-9; spectrum is not Hermitian-symmetric");
    return out;
}

FrequencyMask make_highpass(int n_views, int height, int width, double d0) {
    if (n_views <= 0 || height <= 0 || width <= 0)
        throw std::invalid_argument("make_highpass: dimensions must be positive");
    if (!(d0 > 0.0))
        throw std::invalid_argument("make_highpass: d0 must be positive, got " + std::to_string(d0));
    if (d0 > 0.7071067811865476 + 1e-12)
        throw std::invalid_argument("make_highpass: d0 must be <= 0.7071, got " + std::to_string(d0));

    auto centered = [](int k, int len) {
        const int half = (len + 1) / 2;
        const int kk = (k < half) ? k : k - len;
        return static_cast<double>(kk) / static_cast<double>(len);
    };

    FrequencyMask mask;
    mask.n_views = n_views;
    mask.height = height;
    mask.width = width;
    mask.cutoff_d0 = d0;
    mask.values.resize(static_cast<std::size_t>(n_views) * height * width);
    const double inv = 1.0 / (2.0 * d0 * d0);
    std::size_t i = 0;
    for (int n = 0; n < n_views; ++n) {
        const double fn = centered(n, n_views);
        for (int h = 0; h < height; ++h) {
            const double fh = centered(h, height);
            for (int w = 0; w < width; ++w) {
                const double fw = centered(w, width);
                const double rho2 = fn * fn + fh * fh + fw * fw;
                mask.values[i++] = 1.0 - std::exp(-rho2 * inv);
            }
        }
    }
    return mask;
}

namespace {

void require_mask_shape(const MultiViewLatent& x, const FrequencyMask& mask, const char* where) {
    if (mask.n_views != x.n_views || mask.height != x.height || mask.width != x.width)
        throw std::invalid_argument(std::string(where) + ": mask shape [" +
                                    std::to_string(mask.n_views) + "," + std::to_string(mask.height) +
                                    "," + std::to_string(mask.width) +
                                    "] does not match stack " + x.shape_str());
}

} // namespace

MultiViewLatent band_scale(const MultiViewLatent& x, const FrequencyMask& mask,
                           double alpha_low, double alpha_high) {
    require_mask_shape(x, mask, "band_scale");
    Spectrum s = fft3(x);
    for (int n = 0; n < s.n_views; ++n)
        for (int h = 0; h < s.height; ++h)
            for (int w = 0; w < s.width; ++w) {
                const double hv = mask.at(n, h, w);
                // alpha_low*(1-H) + alpha_high*H, arranged so equal alphas are exact.
                const double f = alpha_low + (alpha_high - alpha_low) * hv;
                for (int c = 0; c < s.channels; ++c) s.at(n, c, h, w) *= f;
            }
    return ifft3(s);
}

MultiViewLatent mvfc(const MultiViewLatent& z_t, const MultiViewLatent& eps_shared,
                     double gamma, const FrequencyMask& mask) {
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("mvfc: gamma must be in [0,1], got " + std::to_string(gamma));
    require_same_shape(z_t, eps_shared, "mvfc");
    require_mask_shape(z_t, mask, "mvfc");
    if (!is_view_constant(eps_shared))
        throw std::invalid_argument("mvfc: eps_shared must be view-constant (identical slices)");

    Spectrum z = fft3(z_t);
    const Spectrum e = fft3(eps_shared);
    for (int n = 0; n < z.n_views; ++n)
        for (int h = 0; h < z.height; ++h)
            for (int w = 0; w < z.width; ++w) {
                const double hv = mask.at(n, h, w);
                const double fz = gamma + (1.0 - gamma) * hv;       // gamma*(1-H) + H
                const double fe = (1.0 - gamma) * (1.0 - hv);       // (1-gamma)*(1-H)
                for (int c = 0; c < z.channels; ++c)
                    z.at(n, c, h, w) = fz * z.at(n, c, h, w) + fe * e.at(n, c, h, w);
            }
    return ifft3(z);
}

double band_energy(const MultiViewLatent& x, const FrequencyMask& mask, bool high_band) {
    require_mask_shape(x, mask, "band_energy");
    const Spectrum s = fft3(x);
    double total = 0.0;
    for (int n = 0; n < s.n_views; ++n)
        for (int h = 0; h < s.height; ++h)
            for (int w = 0; w < s.width; ++w) {
                const double hv = mask.at(n, h, w);
                const double weight = high_band ? hv : 1.0 - hv;
                for (int c = 0; c < s.channels; ++c) {
                    const cplx v = s.at(n, c, h, w) * weight;
                    total += std::norm(v);
                }
            }
    return total;
}

std::vector<double> per_view_low_band_means(const MultiViewLatent& x, double d0) {
    // A length-1 view axis reduces the 3D mask to the 2D spatial radius.
    const FrequencyMask mask2d = make_highpass(1, x.height, x.width, d0);
    std::vector<double> means(x.n_views, 0.0);
    const std::size_t per_view = static_cast<std::size_t>(x.channels) * x.height * x.width;
    for (int v = 0; v < x.n_views; ++v) {
        MultiViewLatent one(1, x.channels, x.height, x.width);
        std::copy(x.data.begin() + v * per_view, x.data.begin() + (v + 1) * per_view,
                  one.data.begin());
        means[v] = mean(band_scale(one, mask2d, 1.0, 0.0));
    }
    return means;
}

double cross_view_low_band_mean_variance(const MultiViewLatent& x, double d0) {
    const std::vector<double> means = per_view_low_band_means(x, d0);
    double mu = 0.0;
    for (double m : means) mu += m;
    mu /= static_cast<double>(means.size());
    double var = 0.0;
    for (double m : means) var += (m - mu) * (m - mu);
    return var / static_cast<double>(means.size());
}

} // namespace splatstyle
