#pragma once

#include <complex>
#include <vector>

#include "splatstyle/tensor.hpp"

namespace splatstyle {

enum class FrequencyLayout { dc_at_zero };

// Complex spectrum of a latent stack. The (view, row, col) axes are
// transformed; the channel axis is not. Forward transform is unnormalized,
// the inverse carries 1/(N*H*W).
struct Spectrum {
    int n_views = 0;
    int channels = 0;
    int height = 0;
    int width = 0;
    FrequencyLayout layout = FrequencyLayout::dc_at_zero;
    std::vector<std::complex<double>> data;

    std::size_t index(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * channels + c) * height + h) * width + w;
    }
    std::complex<double>& at(int n, int c, int h, int w) { return data[index(n, c, h, w)]; }
    std::complex<double> at(int n, int c, int h, int w) const { return data[index(n, c, h, w)]; }
};

// Gaussian high-pass over the three transformed axes:
//   values = 1 - exp(-rho^2 / (2*d0^2)),
// rho the normalized frequency radius with each axis mapped to [-0.5, 0.5).
// The complement 1 - values is the matching low-pass (partition of unity).
struct FrequencyMask {
    enum class Kind { gaussian_highpass };

    int n_views = 0;
    int height = 0;
    int width = 0;
    double cutoff_d0 = 0.0;
    Kind kind = Kind::gaussian_highpass;
    std::vector<double> values; // [N,H,W] in [0,1]

    std::size_t index(int n, int h, int w) const {
        return (static_cast<std::size_t>(n) * height + h) * width + w;
    }
    double at(int n, int h, int w) const { return values[index(n, h, w)]; }
};

Spectrum fft3(const MultiViewLatent& x);
// Returns the real part; throws if the residual imaginary part exceeds 1e-9,
// which cannot happen for spectra produced by this module's own operations.
MultiViewLatent ifft3(const Spectrum& s);

FrequencyMask make_highpass(int n_views, int height, int width, double d0);

// IFFT( alpha_low * F_L + alpha_high * F_H ) with F_L = FFT(x) .* (1-H),
// F_H = FFT(x) .* H. alpha_low = alpha_high = 1 is the identity.
MultiViewLatent band_scale(const MultiViewLatent& x, const FrequencyMask& mask,
                           double alpha_low, double alpha_high);

// Multi-view frequency consistency filter:
//   z_hat = IFFT( gamma * F_L(z) + (1-gamma) * F_L(eps) + F_H(z) ).
// eps_shared must match z_t's shape and be view-constant, so its low band is
// literally shared across views.
MultiViewLatent mvfc(const MultiViewLatent& z_t, const MultiViewLatent& eps_shared,
                     double gamma, const FrequencyMask& mask);

// Sum of squared spectral magnitudes weighted by the band mask (H for the
// high band, 1-H for the low band), totaled over channels.
double band_energy(const MultiViewLatent& x, const FrequencyMask& mask, bool high_band);

// Per-view mean of the 2D spatial low band (cutoff d0 over row/col only),
// and the population variance of those means across views. The variance is
// the desk-scale cross-view consistency statistic.
std::vector<double> per_view_low_band_means(const MultiViewLatent& x, double d0);
double cross_view_low_band_mean_variance(const MultiViewLatent& x, double d0);

} // namespace splatstyle
