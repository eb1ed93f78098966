#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "splatstyle/schedule.hpp"
#include "splatstyle/tensor.hpp"

namespace splatstyle {

enum class TokenRole { text_prompt, null_token, style, content, structure };

const char* token_role_name(TokenRole role);
TokenRole token_role_from_name(const std::string& name);

// Opaque conditioning vector. Only the name (through the fingerprint) and
// the role matter to the shipped denoisers; the values stand in for real
// embeddings so a neural backend can be plugged in behind the same interface.
struct ConditioningToken {
    std::string name;
    TokenRole role = TokenRole::text_prompt;
    std::vector<double> values;
};

struct ConditioningSpec {
    std::vector<ConditioningToken> positive;
    std::vector<ConditioningToken> negative;

    // Both sets nonempty (the null embedding is an explicit token, not an
    // absence), all token vectors finite and of one shared length.
    void validate() const;
};

// Order-independent identity of a token set. Structure-role tokens are
// forwarded to denoisers but excluded here, since the shipped backends
// ignore them.
std::string token_fingerprint(std::span<const ConditioningToken> tokens);

class Denoiser {
public:
    virtual ~Denoiser() = default;
    // Epsilon prediction, same shape as z_t, deterministic.
    virtual MultiViewLatent predict(const MultiViewLatent& z_t, int t,
                                    std::span<const ConditioningToken> tokens) const = 0;
};

// Conditioning-dependent target value, broadcastable over a latent stack.
struct MeanField {
    enum class Kind { scalar, per_channel, field };
    Kind kind = Kind::scalar;
    int channels = 0, height = 0, width = 0; // used by per_channel / field
    std::vector<double> values;

    static MeanField make_scalar(double v);
    static MeanField make_per_channel(std::vector<double> v);
    static MeanField make_field(int c, int h, int w, std::vector<double> v);
    double at(int c, int h, int w) const;
    void check_compatible(const MultiViewLatent& z, const std::string& fingerprint) const;
};

// Optimal epsilon predictor for data concentrated at a conditioning-dependent
// mean: predict(z,t,c) = (z - sqrt(ab_t)*mu_c) / sqrt(1-ab_t).
class GaussianToyDenoiser : public Denoiser {
public:
    GaussianToyDenoiser(NoiseSchedule schedule, std::map<std::string, MeanField> means);
    MultiViewLatent predict(const MultiViewLatent& z_t, int t,
                            std::span<const ConditioningToken> tokens) const override;
    const MeanField& mean_for(const std::string& fingerprint) const;

private:
    NoiseSchedule schedule_;
    std::map<std::string, MeanField> means_;
};

// eps_hat = A*z + b_c with A a fixed random channel-mixing matrix and the
// bias depending on the conditioning fingerprint. Gives gradient tests a
// non-trivial Jacobian.
class FrozenLinearDenoiser : public Denoiser {
public:
    FrozenLinearDenoiser(int channels, std::uint64_t mix_seed, double mix_scale,
                         std::map<std::string, MeanField> biases);
    MultiViewLatent predict(const MultiViewLatent& z_t, int t,
                            std::span<const ConditioningToken> tokens) const override;

private:
    int channels_;
    std::vector<double> mix_; // [C,C]
    std::map<std::string, MeanField> biases_;
};

// eps_neg + beta * (eps_pos - eps_neg)
MultiViewLatent cfg_combine(const MultiViewLatent& eps_neg, const MultiViewLatent& eps_pos,
                            double beta);

// Classifier-free guidance with an arbitrary negative branch; with the null
// token as the negative this is plain CFG.
MultiViewLatent guided_predict(const Denoiser& denoiser, const MultiViewLatent& z_t, int t,
                               const ConditioningSpec& cond, double beta);

} // namespace splatstyle
