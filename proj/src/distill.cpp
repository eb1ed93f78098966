#include "splatstyle/distill.hpp"

#include <stdexcept>
#include <string>

namespace splatstyle {

void DistillConfig::validate() const {
    if (!(beta >= 0.0))
        throw std::invalid_argument("distill: beta must be >= 0, got " + std::to_string(beta));
    if (!(gamma >= 0.0 && gamma <= 1.0))
        throw std::invalid_argument("distill: gamma must be in [0,1], got " + std::to_string(gamma));
}

namespace {

// Rejects conditioning that routes roles against their purpose. The exact
// prompt+style / content / prompt / null pattern is not enforced so that
// degenerate setups (identical specs on both pathways) stay expressible.
void check_roles(const ConditioningSpec& cond, const char* pathway) {
    bool positive_has_null = false, positive_has_other = false;
    for (const auto& tok : cond.positive) {
        if (tok.role == TokenRole::content)
            throw std::invalid_argument(std::string("csd_delta: content-role token '") + tok.name +
                                        "' in the " + pathway + " positive set");
        if (tok.role == TokenRole::null_token)
            positive_has_null = true;
        else if (tok.role != TokenRole::structure)
            positive_has_other = true;
    }
    if (positive_has_null && positive_has_other)
        throw std::invalid_argument(std::string("csd_delta: null token mixed with substantive tokens in the ") +
                                    pathway + " positive set");
    for (const auto& tok : cond.negative) {
        if (tok.role == TokenRole::style)
            throw std::invalid_argument(std::string("csd_delta: style-role token '") + tok.name +
                                        "' in the " + pathway + " negative set");
    }
}

} // namespace

ScoreDelta sds_delta(const Denoiser& d, const MultiViewLatent& z0, int t,
                     const MultiViewLatent& eps, const ConditioningSpec& cond,
                     const DistillConfig& cfg, const NoiseSchedule& s) {
    cfg.validate();
    const MultiViewLatent z_t = ddim_noise(z0, t, eps, s);
    const MultiViewLatent guided = guided_predict(d, z_t, t, cond, cfg.beta);
    return {sub(guided, eps), t, ScoreDelta::Kind::sds};
}

ScoreDelta dds_delta(const Denoiser& d, const LatentPair& pair, int t,
                     const MultiViewLatent& eps, const ConditioningSpec& cond_tgt,
                     const ConditioningSpec& cond_src, const DistillConfig& cfg,
                     const NoiseSchedule& s) {
    cfg.validate();
    const MultiViewLatent zt_tgt = ddim_noise(pair.target, t, eps, s);
    const MultiViewLatent zt_src = ddim_noise(pair.source, t, eps, s);
    const MultiViewLatent g_tgt = guided_predict(d, zt_tgt, t, cond_tgt, cfg.beta);
    const MultiViewLatent g_src = guided_predict(d, zt_src, t, cond_src, cfg.beta);
    return {sub(g_tgt, g_src), t, ScoreDelta::Kind::dds};
}

std::pair<MultiViewLatent, MultiViewLatent> decompose_sds(const Denoiser& d,
                                                          const MultiViewLatent& z0, int t,
                                                          const MultiViewLatent& eps,
                                                          const ConditioningSpec& cond,
                                                          const DistillConfig& cfg,
                                                          const NoiseSchedule& s) {
    cfg.validate();
    cond.validate();
    const MultiViewLatent z_t = ddim_noise(z0, t, eps, s);
    const MultiViewLatent eps_neg = d.predict(z_t, t, cond.negative);
    const MultiViewLatent eps_pos = d.predict(z_t, t, cond.positive);
    return {sub(eps_neg, eps), sub(eps_pos, eps_neg)};
}

ScoreDelta csd_delta(const Denoiser& d, const LatentPair& pair, int t,
                     const MultiViewLatent& eps, const MultiViewLatent& eps_shared,
                     const ConditioningSpec& cond_tgt, const ConditioningSpec& cond_src,
                     const DistillConfig& cfg, const NoiseSchedule& s,
                     const FrequencyMask& mask) {
    cfg.validate();
    cond_tgt.validate();
    cond_src.validate();
    check_roles(cond_tgt, "target");
    check_roles(cond_src, "source");

    // Target pathway gets the frequency-consistency filter; source does not.
    const MultiViewLatent zt_tgt = mvfc(ddim_noise(pair.target, t, eps, s), eps_shared, cfg.gamma, mask);
    const MultiViewLatent zt_src = ddim_noise(pair.source, t, eps, s);

    const MultiViewLatent tgt_pos = d.predict(zt_tgt, t, cond_tgt.positive);
    const MultiViewLatent tgt_neg = d.predict(zt_tgt, t, cond_tgt.negative);
    const MultiViewLatent src_pos = d.predict(zt_src, t, cond_src.positive);
    const MultiViewLatent src_neg = d.predict(zt_src, t, cond_src.negative);

    // (Phi^tgt - Phi^src) / beta, then one multiply by beta: exact beta scale
    // equivariance.
    MultiViewLatent bracket = sub(sub(tgt_pos, tgt_neg), sub(src_pos, src_neg));
    for (double& v : bracket.data) v *= cfg.beta;
    return {std::move(bracket), t, ScoreDelta::Kind::csd};
}

double omega_weight(OmegaKind kind, int t, const NoiseSchedule& s) {
    switch (kind) {
        case OmegaKind::constant_one: return 1.0;
        case OmegaKind::one_minus_alpha_bar: return 1.0 - s.alpha_bar_at(t);
    }
    return 1.0;
}

MultiViewLatent apply_omega(const ScoreDelta& delta, const NoiseSchedule& s,
                            const DistillConfig& cfg) {
    const double w = omega_weight(cfg.omega, delta.t, s);
    if (w == 1.0) return delta.value;
    return scale(delta.value, w);
}

} // namespace splatstyle
