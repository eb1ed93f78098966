#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "splatstyle/spectral.hpp"

using namespace splatstyle;

namespace {

double max_spectral_diff(const Spectrum& s, const oracles::OracleSpectrum& o) {
    double worst = 0.0;
    for (std::size_t i = 0; i < s.data.size(); ++i)
        worst = std::max(worst, std::abs(s.data[i] - o.v[i]));
    return worst;
}

double spectral_energy(const oracles::OracleSpectrum& o) {
    double e = 0.0;
    for (const auto& v : o.v) e += std::norm(v);
    return e;
}

} // namespace

TEST_CASE("fft3 matches the direct DFT oracle") {
    RandomStream rng(101);
    for (auto [n, c, h, w] : {std::array<int, 4>{3, 2, 4, 4}, std::array<int, 4>{5, 1, 6, 7},
                              std::array<int, 4>{4, 3, 8, 8}, std::array<int, 4>{1, 2, 16, 12}}) {
        const MultiViewLatent x = oracles::random_stack(rng, n, c, h, w);
        const Spectrum s = fft3(x);
        const auto o = oracles::dft3_oracle(x);
        CHECK(max_spectral_diff(s, o) < 1e-9);
    }
}

TEST_CASE("fft3 trivial spectra") {
    SUBCASE("all-zeros stack transforms to all zeros") {
        const Spectrum s = fft3(MultiViewLatent(3, 2, 4, 4));
        for (const auto& v : s.data) CHECK(std::abs(v) == 0.0);
    }
    SUBCASE("constant stack concentrates at the DC bin") {
        const double value = 0.8125;
        MultiViewLatent x(3, 1, 4, 5, value);
        const Spectrum s = fft3(x);
        const double dc = value * 3 * 4 * 5;
        CHECK(std::abs(s.at(0, 0, 0, 0) - std::complex<double>(dc, 0.0)) < 1e-10 * dc);
        for (int n = 0; n < 3; ++n)
            for (int h = 0; h < 4; ++h)
                for (int w = 0; w < 5; ++w)
                    if (n || h || w) CHECK(std::abs(s.at(n, 0, h, w)) < 1e-10 * dc);
    }
}

TEST_CASE("fft3/ifft3 round trip within 1e-10") {
    RandomStream rng(102);
    for (auto [n, c, h, w] : {std::array<int, 4>{3, 2, 4, 4}, std::array<int, 4>{7, 1, 5, 9},
                              std::array<int, 4>{8, 3, 16, 16}}) {
        const MultiViewLatent x = oracles::random_stack(rng, n, c, h, w);
        const MultiViewLatent y = ifft3(fft3(x));
        CHECK(max_abs(sub(y, x)) < 1e-10);
    }
}

TEST_CASE("real input yields a Hermitian-symmetric spectrum") {
    RandomStream rng(103);
    const MultiViewLatent x = oracles::random_stack(rng, 4, 1, 6, 5);
    const Spectrum s = fft3(x);
    for (int n = 0; n < 4; ++n)
        for (int h = 0; h < 6; ++h)
            for (int w = 0; w < 5; ++w) {
                const auto a = s.at(n, 0, h, w);
                const auto b = s.at((4 - n) % 4, 0, (6 - h) % 6, (5 - w) % 5);
                CHECK(std::abs(a - std::conj(b)) < 1e-9);
            }
}

TEST_CASE("Parseval holds per channel within 1e-8 relative") {
    RandomStream rng(104);
    const int n = 3, c = 2, h = 8, w = 6;
    const MultiViewLatent x = oracles::random_stack(rng, n, c, h, w);
    const Spectrum s = fft3(x);
    for (int ch = 0; ch < c; ++ch) {
        double pixel_energy = 0.0, spectral = 0.0;
        for (int in = 0; in < n; ++in)
            for (int ih = 0; ih < h; ++ih)
                for (int iw = 0; iw < w; ++iw) {
                    pixel_energy += x.at(in, ch, ih, iw) * x.at(in, ch, ih, iw);
                    spectral += std::norm(s.at(in, ch, ih, iw));
                }
        spectral /= static_cast<double>(n) * h * w;
        CHECK(std::abs(pixel_energy - spectral) < 1e-8 * pixel_energy);
    }
}

TEST_CASE("make_highpass closed form") {
    SUBCASE("DC bin is exactly in the low band") {
        const FrequencyMask m = make_highpass(4, 8, 8, 0.25);
        CHECK(m.at(0, 0, 0) <= 1e-6);
        CHECK(m.at(0, 0, 0) == 0.0);
    }
    SUBCASE("value at rho = d0 is 1 - exp(-1/2)") {
        // bin (0, 2, 0) of an 8-wide axis sits at rho = 0.25 exactly
        const FrequencyMask m = make_highpass(1, 8, 8, 0.25);
        CHECK(m.at(0, 2, 0) == doctest::Approx(0.3934693402873666).epsilon(1e-10));
        CHECK(m.at(0, 2, 0) == doctest::Approx(0.39347).epsilon(1e-4));
    }
    SUBCASE("axis Nyquist with d0=0.1 is deep in the high band") {
        const FrequencyMask m = make_highpass(8, 8, 8, 0.1);
        CHECK(m.at(4, 0, 0) >= 0.999);
    }
    SUBCASE("values are radially monotone") {
        const FrequencyMask m = make_highpass(3, 6, 6, 0.3);
        std::vector<std::pair<double, double>> by_radius;
        for (int n = 0; n < 3; ++n)
            for (int h = 0; h < 6; ++h)
                for (int w = 0; w < 6; ++w) {
                    const double fn = oracles::centered_freq(n, 3);
                    const double fh = oracles::centered_freq(h, 6);
                    const double fw = oracles::centered_freq(w, 6);
                    by_radius.emplace_back(std::sqrt(fn * fn + fh * fh + fw * fw), m.at(n, h, w));
                }
        std::sort(by_radius.begin(), by_radius.end());
        for (std::size_t i = 1; i < by_radius.size(); ++i)
            CHECK(by_radius[i].second >= by_radius[i - 1].second - 1e-12);
    }
    SUBCASE("matches the closed form recomputed independently") {
        const FrequencyMask m = make_highpass(3, 4, 5, 0.2);
        for (int n = 0; n < 3; ++n)
            for (int h = 0; h < 4; ++h)
                for (int w = 0; w < 5; ++w) {
                    const double rho = std::sqrt(std::pow(oracles::centered_freq(n, 3), 2) +
                                                 std::pow(oracles::centered_freq(h, 4), 2) +
                                                 std::pow(oracles::centered_freq(w, 5), 2));
                    CHECK(m.at(n, h, w) ==
                          doctest::Approx(oracles::gaussian_highpass_value(rho, 0.2)).epsilon(1e-12));
                }
    }
    SUBCASE("non-positive and oversized cutoffs are rejected") {
        CHECK_THROWS_WITH_AS(make_highpass(2, 4, 4, 0.0), doctest::Contains("d0"),
                             std::invalid_argument);
        CHECK_THROWS_WITH_AS(make_highpass(2, 4, 4, -0.1), doctest::Contains("d0"),
                             std::invalid_argument);
        CHECK_THROWS_AS(make_highpass(2, 4, 4, 0.8), std::invalid_argument);
    }
}

TEST_CASE("band_scale") {
    RandomStream rng(105);
    const MultiViewLatent x = oracles::random_stack(rng, 3, 2, 8, 8);
    const FrequencyMask mask = make_highpass(3, 8, 8, 0.25);

    SUBCASE("unit factors are the identity") {
        CHECK(max_abs(sub(band_scale(x, mask, 1.0, 1.0), x)) < 1e-10);
    }
    SUBCASE("zero factors zero everything") {
        CHECK(max_abs(band_scale(x, mask, 0.0, 0.0)) < 1e-12);
    }
    SUBCASE("constant stack is pure low band") {
        MultiViewLatent c(3, 1, 8, 8, 0.75);
        const FrequencyMask m1 = make_highpass(3, 8, 8, 0.25);
        const MultiViewLatent out = band_scale(c, m1, 0.5, 1.0);
        CHECK(max_abs(sub(out, scale(c, 0.5))) < 1e-10);
    }
    SUBCASE("mask shape mismatch rejected") {
        const FrequencyMask bad = make_highpass(4, 8, 8, 0.25);
        CHECK_THROWS_AS(band_scale(x, bad, 1.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("mvfc core behavior") {
    RandomStream rng(106);
    const int n = 4, c = 2, h = 8, w = 8;
    const double d0 = 0.25;
    const MultiViewLatent z = oracles::random_stack(rng, n, c, h, w);
    Image slice(c, h, w);
    rng.fill_normal(slice);
    const MultiViewLatent eps = replicate_view(slice, n);
    const FrequencyMask mask = make_highpass(n, h, w, d0);

    SUBCASE("gamma = 1 is the identity within 1e-10") {
        CHECK(max_abs(sub(mvfc(z, eps, 1.0, mask), z)) < 1e-10);
    }
    SUBCASE("gamma outside [0,1] and shape errors are rejected") {
        CHECK_THROWS_AS(mvfc(z, eps, 1.5, mask), std::invalid_argument);
        CHECK_THROWS_AS(mvfc(z, eps, -0.1, mask), std::invalid_argument);
        CHECK_THROWS_AS(mvfc(z, MultiViewLatent(n, c, h, w + 1), 0.9, mask),
                        std::invalid_argument);
    }
    SUBCASE("non-view-constant shared noise is rejected") {
        MultiViewLatent bad = eps;
        bad.at(1, 0, 0, 0) += 1.0;
        CHECK_THROWS_WITH_AS(mvfc(z, bad, 0.9, mask), doctest::Contains("view-constant"),
                             std::invalid_argument);
    }

    SUBCASE("spectral update is exactly the low-band blend, checked by oracle") {
        // FFT(mvfc(z)) - FFT(z) == (1-gamma) * (1-H) * (E - Z), bin by bin.
        for (double gamma : {0.0, 0.5, 0.9}) {
            const MultiViewLatent out = mvfc(z, eps, gamma, mask);
            const auto so = oracles::dft3_oracle(out);
            const auto zo = oracles::dft3_oracle(z);
            const auto eo = oracles::dft3_oracle(eps);
            double worst = 0.0;
            for (int in = 0; in < n; ++in)
                for (int ic = 0; ic < c; ++ic)
                    for (int ih = 0; ih < h; ++ih)
                        for (int iw = 0; iw < w; ++iw) {
                            const double low = 1.0 - mask.at(in, ih, iw);
                            const auto expected = (1.0 - gamma) * low *
                                                  (eo.at(in, ic, ih, iw) - zo.at(in, ic, ih, iw));
                            const auto got = so.at(in, ic, ih, iw) - zo.at(in, ic, ih, iw);
                            worst = std::max(worst, std::abs(got - expected));
                        }
            CHECK(worst < 1e-9);
        }
    }

    SUBCASE("gamma = 0.9 update energy matches the closed form via the DFT oracle") {
        const MultiViewLatent out = mvfc(z, eps, 0.9, mask);
        const auto diff_spec = oracles::dft3_oracle(sub(out, z));
        const double diff_energy = spectral_energy(diff_spec);

        const auto zo = oracles::dft3_oracle(z);
        const auto eo = oracles::dft3_oracle(eps);
        double expected = 0.0;
        for (int in = 0; in < n; ++in)
            for (int ic = 0; ic < c; ++ic)
                for (int ih = 0; ih < h; ++ih)
                    for (int iw = 0; iw < w; ++iw) {
                        const double low = 1.0 - mask.at(in, ih, iw);
                        expected += std::norm(0.1 * low * zo.at(in, ic, ih, iw) -
                                              0.1 * low * eo.at(in, ic, ih, iw));
                    }
        CHECK(diff_energy == doctest::Approx(expected).epsilon(1e-8));
    }

    SUBCASE("linearity up to the shared-noise constant") {
        const MultiViewLatent y = oracles::random_stack(rng, n, c, h, w);
        const double a = 0.7, b = -1.3, gamma = 0.6;
        const MultiViewLatent lhs = mvfc(add(scale(z, a), scale(y, b)), eps, gamma, mask);
        // constant term: mvfc of the zero stack
        const MultiViewLatent c0 = mvfc(MultiViewLatent(n, c, h, w), eps, gamma, mask);
        const MultiViewLatent rhs = axpy(axpy(scale(mvfc(z, eps, gamma, mask), a), b,
                                              mvfc(y, eps, gamma, mask)),
                                         -(a + b - 1.0), c0);
        CHECK(max_abs(sub(lhs, rhs)) < 1e-10);
    }

    SUBCASE("cross-view low-band mean variance is nonincreasing as gamma decreases") {
        double prev = -1.0;
        for (double gamma : {0.0, 0.5, 0.9, 1.0}) {
            const double v = cross_view_low_band_mean_variance(mvfc(z, eps, gamma, mask), d0);
            if (prev >= 0.0) CHECK(v >= prev - 1e-15);
            prev = v;
        }
        // strict contraction between 1.0 and 0.9, the ablation pair
        const double v1 = cross_view_low_band_mean_variance(mvfc(z, eps, 1.0, mask), d0);
        const double v09 = cross_view_low_band_mean_variance(mvfc(z, eps, 0.9, mask), d0);
        CHECK(v09 < v1);
    }
}

TEST_CASE("per-view low-band means track per-view offsets") {
    const int n = 4, c = 1, h = 8, w = 8;
    MultiViewLatent x(n, c, h, w);
    const double offsets[4] = {0.1, -0.4, 0.8, 0.25};
    for (int v = 0; v < n; ++v)
        for (int ih = 0; ih < h; ++ih)
            for (int iw = 0; iw < w; ++iw) x.at(v, 0, ih, iw) = offsets[v];
    const auto means = per_view_low_band_means(x, 0.25);
    for (int v = 0; v < n; ++v) CHECK(means[v] == doctest::Approx(offsets[v]).epsilon(1e-10));
    CHECK(cross_view_low_band_mean_variance(replicate_view(Image(1, 4, 4, 0.3), 3), 0.25) ==
          doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("band_energy splits concentrate where expected") {
    RandomStream rng(107);
    const MultiViewLatent x = oracles::random_stack(rng, 3, 1, 8, 8);
    const FrequencyMask mask = make_highpass(3, 8, 8, 0.25);

    // band_scale's spectrum is exactly (alpha_low*(1-H) + alpha_high*H) * X,
    // so scaling one band strictly and monotonically drains its energy.
    double prev = -1.0;
    for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
        const double e = band_energy(band_scale(x, mask, 1.0, alpha), mask, true);
        if (prev >= 0.0) CHECK(e >= prev);
        prev = e;
    }
    const MultiViewLatent killed = band_scale(x, mask, 1.0, 0.0);
    CHECK(band_energy(killed, mask, true) < 0.5 * band_energy(x, mask, true));

    // the surviving spectrum matches the closed form, bin by bin
    const auto ko = oracles::dft3_oracle(killed);
    const auto xo = oracles::dft3_oracle(x);
    double worst = 0.0;
    for (int n = 0; n < 3; ++n)
        for (int h = 0; h < 8; ++h)
            for (int w = 0; w < 8; ++w) {
                const double low = 1.0 - mask.at(n, h, w);
                worst = std::max(worst, std::abs(ko.at(n, 0, h, w) - low * xo.at(n, 0, h, w)));
            }
    CHECK(worst < 1e-9);

    // constant stacks are pure low band (the mask is exactly 0 at DC); what
    // remains is transform round-off
    const MultiViewLatent c(3, 1, 8, 8, 1.0);
    CHECK(band_energy(c, mask, true) <= 1e-20);
}
