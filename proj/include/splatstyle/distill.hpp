#pragma once

#include <utility>

#include "splatstyle/guidance.hpp"
#include "splatstyle/spectral.hpp"

namespace splatstyle {

enum class OmegaKind { constant_one, one_minus_alpha_bar };

struct DistillConfig {
    double beta = 7.5;                          // CFG scale
    OmegaKind omega = OmegaKind::constant_one;  // timestep weighting
    double gamma = 0.9;                         // MVFC blend

    void validate() const;
};

// The bracketed residual of a distillation gradient, before the render
// Jacobian pullback.
struct ScoreDelta {
    enum class Kind { sds, dds, csd };
    MultiViewLatent value;
    int t = 0;
    Kind kind = Kind::sds;
};

// delta = guided_predict(noised z0) - eps
ScoreDelta sds_delta(const Denoiser& d, const MultiViewLatent& z0, int t,
                     const MultiViewLatent& eps, const ConditioningSpec& cond,
                     const DistillConfig& cfg, const NoiseSchedule& s);

// delta = guided_predict(noised target) - guided_predict(noised source),
// both pathways sharing the same eps draw.
ScoreDelta dds_delta(const Denoiser& d, const LatentPair& pair, int t,
                     const MultiViewLatent& eps, const ConditioningSpec& cond_tgt,
                     const ConditioningSpec& cond_src, const DistillConfig& cfg,
                     const NoiseSchedule& s);

// (recon, cfg_term) with recon = eps_neg_hat - eps and
// cfg_term = eps_pos_hat - eps_neg_hat; recon + beta*cfg_term == sds_delta.
std::pair<MultiViewLatent, MultiViewLatent> decompose_sds(const Denoiser& d,
                                                          const MultiViewLatent& z0, int t,
                                                          const MultiViewLatent& eps,
                                                          const ConditioningSpec& cond,
                                                          const DistillConfig& cfg,
                                                          const NoiseSchedule& s);

// Reconstruction-free stylized distillation residual:
//   z_hat_tgt = mvfc(noised target), noised source untouched,
//   Phi^k = beta * (eps_hat(z^k, pos_k) - eps_hat(z^k, neg_k)),
//   delta = Phi^tgt - Phi^src.
// The bracket is computed first and scaled by beta once, so
// csd_delta(k*beta) == k*csd_delta(beta) exactly.
ScoreDelta csd_delta(const Denoiser& d, const LatentPair& pair, int t,
                     const MultiViewLatent& eps, const MultiViewLatent& eps_shared,
                     const ConditioningSpec& cond_tgt, const ConditioningSpec& cond_src,
                     const DistillConfig& cfg, const NoiseSchedule& s,
                     const FrequencyMask& mask);

double omega_weight(OmegaKind kind, int t, const NoiseSchedule& s);
MultiViewLatent apply_omega(const ScoreDelta& delta, const NoiseSchedule& s,
                            const DistillConfig& cfg);

} // namespace splatstyle
