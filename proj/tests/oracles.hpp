// Test-only independent oracles: direct DFT summation, closed-form toy
// denoiser algebra, and quadrature points. None of these share code with the
// library paths they check.
#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "splatstyle/rng.hpp"
#include "splatstyle/tensor.hpp"

namespace oracles {

struct OracleSpectrum {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<std::complex<double>> v;

    std::size_t index(int in, int ic, int ih, int iw) const {
        return ((static_cast<std::size_t>(in) * c + ic) * h + ih) * w + iw;
    }
    std::complex<double> at(int in, int ic, int ih, int iw) const { return v[index(in, ic, ih, iw)]; }
};

// Unnormalized forward DFT over (view,row,col) by direct per-axis summation.
inline OracleSpectrum dft3_oracle(const splatstyle::MultiViewLatent& x) {
    OracleSpectrum s;
    s.n = x.n_views;
    s.c = x.channels;
    s.h = x.height;
    s.w = x.width;
    s.v.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s.v[i] = std::complex<double>(x.data[i], 0.0);

    auto dft_axis = [&](int len, auto get, auto set) {
        std::vector<std::complex<double>> line(len), out(len);
        for (int j = 0; j < len; ++j) line[j] = get(j);
        for (int k = 0; k < len; ++k) {
            std::complex<double> acc(0.0, 0.0);
            for (int j = 0; j < len; ++j) {
                const double a = -2.0 * M_PI * static_cast<double>(j) * k / len;
                acc += line[j] * std::complex<double>(std::cos(a), std::sin(a));
            }
            out[k] = acc;
        }
        for (int k = 0; k < len; ++k) set(k, out[k]);
    };

    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            for (int h = 0; h < s.h; ++h)
                dft_axis(s.w, [&](int j) { return s.v[s.index(n, c, h, j)]; },
                         [&](int k, std::complex<double> val) { s.v[s.index(n, c, h, k)] = val; });
            for (int w = 0; w < s.w; ++w)
                dft_axis(s.h, [&](int j) { return s.v[s.index(n, c, j, w)]; },
                         [&](int k, std::complex<double> val) { s.v[s.index(n, c, k, w)] = val; });
        }
    for (int c = 0; c < s.c; ++c)
        for (int h = 0; h < s.h; ++h)
            for (int w = 0; w < s.w; ++w)
                dft_axis(s.n, [&](int j) { return s.v[s.index(j, c, h, w)]; },
                         [&](int k, std::complex<double> val) { s.v[s.index(k, c, h, w)] = val; });
    return s;
}

inline double gaussian_highpass_value(double rho, double d0) {
    return 1.0 - std::exp(-(rho * rho) / (2.0 * d0 * d0));
}

inline double centered_freq(int k, int len) {
    const int half = (len + 1) / 2;
    return static_cast<double>(k < half ? k : k - len) / len;
}

// Toy-denoiser closed forms (scalar case).
inline double toy_eps_hat(double z, double ab, double mu) {
    return (z - std::sqrt(ab) * mu) / std::sqrt(1.0 - ab);
}

inline double guided_scalar(double z, double ab, double mu_pos, double mu_neg, double beta) {
    const double en = toy_eps_hat(z, ab, mu_neg);
    const double ep = toy_eps_hat(z, ab, mu_pos);
    return en + beta * (ep - en);
}

// CSD residual for the toy denoiser: independent of both latents and of eps.
inline double csd_scalar(double beta, double ab, double mu_prompt_style, double mu_content,
                         double mu_prompt, double mu_null) {
    return beta * std::sqrt(ab) / std::sqrt(1.0 - ab) *
           ((mu_content - mu_prompt_style) - (mu_null - mu_prompt));
}

inline double dds_scalar(double ab, double z0_tgt, double z0_src, double beta, double mu_pos_t,
                         double mu_neg_t, double mu_pos_s, double mu_neg_s) {
    const double s = std::sqrt(1.0 - ab);
    const double root = std::sqrt(ab);
    return root * (z0_tgt - z0_src) / s +
           root / s *
               ((mu_neg_s - mu_neg_t) + beta * ((mu_neg_t - mu_pos_t) - (mu_neg_s - mu_pos_s)));
}

// Deterministic quasi-uniform sphere covering for quadrature.
inline std::vector<std::array<double, 3>> fibonacci_sphere(int count) {
    std::vector<std::array<double, 3>> pts(count);
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * i;
        pts[i] = {r * std::cos(th), r * std::sin(th), z};
    }
    return pts;
}

inline splatstyle::MultiViewLatent random_stack(splatstyle::RandomStream& rng, int n, int c, int h,
                                                int w) {
    splatstyle::MultiViewLatent x(n, c, h, w);
    rng.fill_normal(x);
    return x;
}

} // namespace oracles
