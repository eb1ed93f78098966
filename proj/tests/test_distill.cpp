#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "splatstyle/distill.hpp"

using namespace splatstyle;

namespace {

ConditioningToken tok(const std::string& name, TokenRole role) { return {name, role, {1.0}}; }

struct ToyWorld {
    NoiseSchedule schedule = build_schedule(2, 0.1, 0.1, 1, 1, 1); // alpha_bar(2) = 0.81
    double mu_prompt_style = 2.0, mu_content = 0.5, mu_prompt = 1.0, mu_null = 0.0;
    GaussianToyDenoiser denoiser;
    ConditioningSpec cond_tgt, cond_src;

    ToyWorld()
        : denoiser(schedule,
                   [&] {
                       std::map<std::string, MeanField> m;
                       m.emplace("prompt+style_ref", MeanField::make_scalar(2.0));
                       m.emplace("content_ref", MeanField::make_scalar(0.5));
                       m.emplace("prompt", MeanField::make_scalar(1.0));
                       m.emplace("null", MeanField::make_scalar(0.0));
                       return m;
                   }()) {
        cond_tgt.positive = {tok("prompt", TokenRole::text_prompt),
                             tok("style_ref", TokenRole::style)};
        cond_tgt.negative = {tok("content_ref", TokenRole::content)};
        cond_src.positive = {tok("prompt", TokenRole::text_prompt)};
        cond_src.negative = {tok("null", TokenRole::null_token)};
    }
};

} // namespace

TEST_CASE("sds_delta") {
    ToyWorld w;
    DistillConfig cfg;
    cfg.beta = 1.0;

    SUBCASE("sample at the data mean gives a vanishing residual") {
        std::map<std::string, MeanField> m;
        m.emplace("prompt", MeanField::make_scalar(1.25));
        m.emplace("null", MeanField::make_scalar(1.25));
        const GaussianToyDenoiser d(w.schedule, m);
        ConditioningSpec cond;
        cond.positive = {tok("prompt", TokenRole::text_prompt)};
        cond.negative = {tok("null", TokenRole::null_token)};
        RandomStream rng(1);
        const MultiViewLatent z0(2, 1, 3, 3, 1.25);
        MultiViewLatent eps(2, 1, 3, 3);
        rng.fill_normal(eps);
        const ScoreDelta delta = sds_delta(d, z0, 2, eps, cond, cfg, w.schedule);
        CHECK(max_abs(delta.value) < 1e-12);
    }
    SUBCASE("scalar closed form") {
        std::map<std::string, MeanField> m;
        m.emplace("prompt", MeanField::make_scalar(0.0));
        m.emplace("null", MeanField::make_scalar(0.0));
        const GaussianToyDenoiser d(w.schedule, m);
        ConditioningSpec cond;
        cond.positive = {tok("prompt", TokenRole::text_prompt)};
        cond.negative = {tok("null", TokenRole::null_token)};
        const MultiViewLatent z0(1, 1, 1, 1, 1.0);
        const MultiViewLatent eps(1, 1, 1, 1, 0.0);
        const ScoreDelta delta = sds_delta(d, z0, 2, eps, cond, cfg, w.schedule);
        CHECK(delta.value.data[0] == doctest::Approx(0.9 / std::sqrt(0.19)).epsilon(1e-12));
        CHECK(delta.value.data[0] == doctest::Approx(2.06474).epsilon(1e-5));
    }
    SUBCASE("beta = 0 leaves the unconditional residual") {
        DistillConfig cfg0;
        cfg0.beta = 0.0;
        RandomStream rng(2);
        const MultiViewLatent z0 = oracles::random_stack(rng, 2, 1, 3, 3);
        MultiViewLatent eps(2, 1, 3, 3);
        rng.fill_normal(eps);
        const ScoreDelta delta = sds_delta(w.denoiser, z0, 2, eps, w.cond_src, cfg0, w.schedule);
        const MultiViewLatent z_t = ddim_noise(z0, 2, eps, w.schedule);
        const MultiViewLatent expect = sub(w.denoiser.predict(z_t, 2, w.cond_src.negative), eps);
        CHECK(delta.value.data == expect.data);
    }
}

TEST_CASE("decompose_sds identity") {
    ToyWorld w;
    RandomStream rng(3);
    for (int i = 0; i < 10; ++i) {
        DistillConfig cfg;
        cfg.beta = 7.5 * rng.next_double();
        const MultiViewLatent z0 = oracles::random_stack(rng, 2, 2, 4, 4);
        MultiViewLatent eps(2, 2, 4, 4);
        rng.fill_normal(eps);
        const auto [recon, cfg_term] = decompose_sds(w.denoiser, z0, 2, eps, w.cond_src, cfg,
                                                     w.schedule);
        const ScoreDelta delta = sds_delta(w.denoiser, z0, 2, eps, w.cond_src, cfg, w.schedule);
        const MultiViewLatent recombined = axpy(recon, cfg.beta, cfg_term);
        CHECK(max_abs(sub(recombined, delta.value)) <= 1e-12);
    }
    SUBCASE("beta = 0 collapses to the reconstruction term") {
        DistillConfig cfg;
        cfg.beta = 0.0;
        RandomStream rng2(4);
        const MultiViewLatent z0 = oracles::random_stack(rng2, 1, 1, 3, 3);
        MultiViewLatent eps(1, 1, 3, 3);
        rng2.fill_normal(eps);
        const auto [recon, cfg_term] = decompose_sds(w.denoiser, z0, 2, eps, w.cond_src, cfg,
                                                     w.schedule);
        const ScoreDelta delta = sds_delta(w.denoiser, z0, 2, eps, w.cond_src, cfg, w.schedule);
        CHECK(delta.value.data == recon.data);
    }
    SUBCASE("sampling at the negative mean with zero eps kills recon") {
        DistillConfig cfg;
        const MultiViewLatent z0(1, 1, 2, 2, 0.0); // mu_null = 0
        const MultiViewLatent eps(1, 1, 2, 2, 0.0);
        const auto [recon, cfg_term] = decompose_sds(w.denoiser, z0, 2, eps, w.cond_src, cfg,
                                                     w.schedule);
        CHECK(max_abs(recon) < 1e-12);
    }
}

TEST_CASE("dds decomposes branch-wise into recon and cfg terms") {
    ToyWorld w;
    DistillConfig cfg;
    cfg.beta = 5.25;
    RandomStream rng(45);
    const MultiViewLatent src = oracles::random_stack(rng, 2, 2, 4, 4);
    const MultiViewLatent tgt = oracles::random_stack(rng, 2, 2, 4, 4);
    MultiViewLatent eps(2, 2, 4, 4);
    rng.fill_normal(eps);
    const LatentPair pair(src, tgt);

    const ScoreDelta delta =
        dds_delta(w.denoiser, pair, 2, eps, w.cond_tgt, w.cond_src, cfg, w.schedule);
    const auto [recon_t, cfg_t] = decompose_sds(w.denoiser, tgt, 2, eps, w.cond_tgt, cfg, w.schedule);
    const auto [recon_s, cfg_s] = decompose_sds(w.denoiser, src, 2, eps, w.cond_src, cfg, w.schedule);
    const MultiViewLatent recombined =
        sub(axpy(recon_t, cfg.beta, cfg_t), axpy(recon_s, cfg.beta, cfg_s));
    CHECK(max_abs(sub(recombined, delta.value)) <= 1e-12);
}

TEST_CASE("dds_delta") {
    ToyWorld w;
    DistillConfig cfg;
    cfg.beta = 4.0;
    RandomStream rng(5);

    SUBCASE("identical branches vanish exactly") {
        const MultiViewLatent z0 = oracles::random_stack(rng, 2, 1, 4, 4);
        MultiViewLatent eps(2, 1, 4, 4);
        rng.fill_normal(eps);
        const LatentPair pair(z0, z0);
        const ScoreDelta delta = dds_delta(w.denoiser, pair, 2, eps, w.cond_src, w.cond_src, cfg,
                                           w.schedule);
        for (double v : delta.value.data) CHECK(v == 0.0);
    }
    SUBCASE("matches the symbolic expansion oracle") {
        const MultiViewLatent src = oracles::random_stack(rng, 2, 1, 3, 3);
        const MultiViewLatent tgt = oracles::random_stack(rng, 2, 1, 3, 3);
        MultiViewLatent eps(2, 1, 3, 3);
        rng.fill_normal(eps);
        const LatentPair pair(src, tgt);
        const ScoreDelta delta = dds_delta(w.denoiser, pair, 2, eps, w.cond_tgt, w.cond_src, cfg,
                                           w.schedule);
        for (int n = 0; n < 2; ++n)
            for (int h = 0; h < 3; ++h)
                for (int iw = 0; iw < 3; ++iw) {
                    const double expect = oracles::dds_scalar(
                        0.81, tgt.at(n, 0, h, iw), src.at(n, 0, h, iw), cfg.beta,
                        w.mu_prompt_style, w.mu_content, w.mu_prompt, w.mu_null);
                    CHECK(delta.value.at(n, 0, h, iw) == doctest::Approx(expect).epsilon(1e-10));
                }
    }
    SUBCASE("the shared eps draw cancels") {
        const MultiViewLatent src = oracles::random_stack(rng, 2, 1, 3, 3);
        const MultiViewLatent tgt = oracles::random_stack(rng, 2, 1, 3, 3);
        MultiViewLatent eps1(2, 1, 3, 3), eps2(2, 1, 3, 3);
        rng.fill_normal(eps1);
        rng.fill_normal(eps2);
        const LatentPair pair(src, tgt);
        const ScoreDelta a = dds_delta(w.denoiser, pair, 2, eps1, w.cond_tgt, w.cond_src, cfg,
                                       w.schedule);
        const ScoreDelta b = dds_delta(w.denoiser, pair, 2, eps2, w.cond_tgt, w.cond_src, cfg,
                                       w.schedule);
        CHECK(max_abs(sub(a.value, b.value)) < 1e-10);
    }
}

TEST_CASE("csd_delta") {
    ToyWorld w;
    DistillConfig cfg;
    cfg.beta = 7.5;
    cfg.gamma = 1.0;
    RandomStream rng(6);
    const int n = 4, c = 1, h = 8, wd = 8;
    const FrequencyMask mask = make_highpass(n, h, wd, 0.25);

    auto shared_eps = [&](RandomStream& r) {
        Image slice(c, h, wd);
        r.fill_normal(slice);
        return replicate_view(slice, n);
    };

    SUBCASE("identical branches and gamma = 1 vanish") {
        const MultiViewLatent z0 = oracles::random_stack(rng, n, c, h, wd);
        MultiViewLatent eps(n, c, h, wd);
        rng.fill_normal(eps);
        const LatentPair pair(z0, z0);
        const ScoreDelta delta = csd_delta(w.denoiser, pair, 2, eps, shared_eps(rng), w.cond_tgt,
                                           w.cond_tgt, cfg, w.schedule, mask);
        CHECK(max_abs(delta.value) < 1e-12);
    }
    SUBCASE("matches the closed-form oracle and ignores both latents") {
        const MultiViewLatent src = oracles::random_stack(rng, n, c, h, wd);
        const MultiViewLatent tgt = oracles::random_stack(rng, n, c, h, wd);
        MultiViewLatent eps(n, c, h, wd);
        rng.fill_normal(eps);
        const LatentPair pair(src, tgt);
        const ScoreDelta delta = csd_delta(w.denoiser, pair, 2, eps, shared_eps(rng), w.cond_tgt,
                                           w.cond_src, cfg, w.schedule, mask);
        const double expect = oracles::csd_scalar(cfg.beta, 0.81, w.mu_prompt_style, w.mu_content,
                                                  w.mu_prompt, w.mu_null);
        for (double v : delta.value.data) CHECK(v == doctest::Approx(expect).epsilon(1e-10));
    }
    SUBCASE("scalar instance from the closed form") {
        const double expect =
            oracles::csd_scalar(7.5, 0.81, 2.0, 0.5, 1.0, 0.0);
        CHECK(expect == doctest::Approx(7.5 * (0.9 / std::sqrt(0.19)) * -0.5).epsilon(1e-12));
        CHECK(expect == doctest::Approx(-7.74277).epsilon(1e-5));
        const MultiViewLatent z0(1, 1, 1, 1, 0.3);
        const FrequencyMask m1 = make_highpass(1, 1, 1, 0.25);
        const LatentPair pair(z0, z0);
        const ScoreDelta delta =
            csd_delta(w.denoiser, pair, 2, MultiViewLatent(1, 1, 1, 1),
                      MultiViewLatent(1, 1, 1, 1), w.cond_tgt, w.cond_src, cfg, w.schedule, m1);
        CHECK(delta.value.data[0] == doctest::Approx(expect).epsilon(1e-10));
    }
    SUBCASE("invariant to the eps draw at gamma = 1") {
        const MultiViewLatent src = oracles::random_stack(rng, n, c, h, wd);
        const MultiViewLatent tgt = oracles::random_stack(rng, n, c, h, wd);
        MultiViewLatent eps1(n, c, h, wd), eps2(n, c, h, wd);
        rng.fill_normal(eps1);
        rng.fill_normal(eps2);
        const MultiViewLatent es = shared_eps(rng);
        const LatentPair pair(src, tgt);
        const ScoreDelta a =
            csd_delta(w.denoiser, pair, 2, eps1, es, w.cond_tgt, w.cond_src, cfg, w.schedule, mask);
        const ScoreDelta b =
            csd_delta(w.denoiser, pair, 2, eps2, es, w.cond_tgt, w.cond_src, cfg, w.schedule, mask);
        CHECK(max_abs(sub(a.value, b.value)) <= 1e-10);
    }
    SUBCASE("exact beta scale equivariance") {
        const MultiViewLatent src = oracles::random_stack(rng, n, c, h, wd);
        const MultiViewLatent tgt = oracles::random_stack(rng, n, c, h, wd);
        MultiViewLatent eps(n, c, h, wd);
        rng.fill_normal(eps);
        const MultiViewLatent es = shared_eps(rng);
        const LatentPair pair(src, tgt);
        DistillConfig cfg1 = cfg;
        cfg1.beta = 1.0;
        DistillConfig cfgb = cfg;
        cfgb.beta = 3.75;
        const ScoreDelta at1 =
            csd_delta(w.denoiser, pair, 2, eps, es, w.cond_tgt, w.cond_src, cfg1, w.schedule, mask);
        const ScoreDelta atb =
            csd_delta(w.denoiser, pair, 2, eps, es, w.cond_tgt, w.cond_src, cfgb, w.schedule, mask);
        for (std::size_t i = 0; i < atb.value.data.size(); ++i)
            CHECK(atb.value.data[i] == 3.75 * at1.value.data[i]);
    }
    SUBCASE("misconfigured roles are rejected") {
        ConditioningSpec bad = w.cond_tgt;
        bad.positive.push_back(tok("content_ref", TokenRole::content));
        const MultiViewLatent z0(n, c, h, wd, 0.1);
        const LatentPair pair(z0, z0);
        CHECK_THROWS_WITH_AS(csd_delta(w.denoiser, pair, 2, MultiViewLatent(n, c, h, wd),
                                       MultiViewLatent(n, c, h, wd), bad, w.cond_src, cfg,
                                       w.schedule, mask),
                             doctest::Contains("content"), std::invalid_argument);
        ConditioningSpec bad2 = w.cond_src;
        bad2.negative.push_back(tok("style_ref", TokenRole::style));
        CHECK_THROWS_AS(csd_delta(w.denoiser, pair, 2, MultiViewLatent(n, c, h, wd),
                                  MultiViewLatent(n, c, h, wd), w.cond_tgt, bad2, cfg, w.schedule,
                                  mask),
                        std::invalid_argument);
    }
    SUBCASE("frozen-linear: gamma only touches Phi^tgt through the low band") {
        std::map<std::string, MeanField> biases;
        biases.emplace("prompt+style_ref", MeanField::make_scalar(0.8));
        biases.emplace("content_ref", MeanField::make_scalar(0.2));
        const FrozenLinearDenoiser lin(1, 77, 0.5, biases);

        const MultiViewLatent tgt = oracles::random_stack(rng, n, c, h, wd);
        MultiViewLatent eps(n, c, h, wd);
        rng.fill_normal(eps);
        const MultiViewLatent es = shared_eps(rng);
        const MultiViewLatent z_t = ddim_noise(tgt, 2, eps, w.schedule);

        auto phi_tgt = [&](double gamma) {
            const MultiViewLatent zt_hat = mvfc(z_t, es, gamma, mask);
            return scale(sub(lin.predict(zt_hat, 2, w.cond_tgt.positive),
                             lin.predict(zt_hat, 2, w.cond_tgt.negative)),
                         cfg.beta);
        };
        const MultiViewLatent diff = sub(phi_tgt(0.9), phi_tgt(1.0));
        const Spectrum ds = fft3(diff);
        double worst = 0.0;
        for (int in = 0; in < n; ++in)
            for (int ih = 0; ih < h; ++ih)
                for (int iw2 = 0; iw2 < wd; ++iw2)
                    worst = std::max(worst, mask.at(in, ih, iw2) * std::abs(ds.at(in, 0, ih, iw2)));
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("apply_omega") {
    const NoiseSchedule s = build_schedule(2, 0.1, 0.1, 1, 1, 1);
    ScoreDelta delta;
    delta.value = MultiViewLatent(1, 1, 2, 2, 3.0);
    delta.t = 2;
    DistillConfig cfg;

    SUBCASE("constant_one is the identity") {
        cfg.omega = OmegaKind::constant_one;
        CHECK(apply_omega(delta, s, cfg).data == delta.value.data);
    }
    SUBCASE("one_minus_alpha_bar at alpha_bar = 0.81 scales by 0.19") {
        cfg.omega = OmegaKind::one_minus_alpha_bar;
        const MultiViewLatent out = apply_omega(delta, s, cfg);
        for (double v : out.data) CHECK(v == doctest::Approx(3.0 * 0.19).epsilon(1e-12));
    }
    SUBCASE("the largest alpha_bar gives the smallest weight") {
        cfg.omega = OmegaKind::one_minus_alpha_bar;
        CHECK(omega_weight(cfg.omega, 1, s) < omega_weight(cfg.omega, 2, s));
    }
}
