#include "splatstyle/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace splatstyle {

const char* token_role_name(TokenRole role) {
    switch (role) {
        case TokenRole::text_prompt: return "text_prompt";
        case TokenRole::null_token: return "null";
        case TokenRole::style: return "style";
        case TokenRole::content: return "content";
        case TokenRole::structure: return "structure";
    }
    return "?";
}

TokenRole token_role_from_name(const std::string& name) {
    if (name == "text_prompt") return TokenRole::text_prompt;
    if (name == "null") return TokenRole::null_token;
    if (name == "style") return TokenRole::style;
    if (name == "content") return TokenRole::content;
    if (name == "structure") return TokenRole::structure;
    throw std::invalid_argument("unknown token role '" + name + "'");
}

void ConditioningSpec::validate() const {
    if (positive.empty()) throw std::invalid_argument("conditioning: positive token set is empty");
    if (negative.empty()) throw std::invalid_argument("conditioning: negative token set is empty");
    std::size_t len = 0;
    bool have_len = false;
    auto check = [&](const ConditioningToken& tok) {
        if (tok.name.empty()) throw std::invalid_argument("conditioning: unnamed token");
        for (double v : tok.values)
            if (!std::isfinite(v))
                throw std::invalid_argument("conditioning: token '" + tok.name +
                                            "' has non-finite values");
        if (!have_len) {
            len = tok.values.size();
            have_len = true;
        } else if (tok.values.size() != len) {
            throw std::invalid_argument("conditioning: token '" + tok.name +
                                        "' length differs from the run's token length");
        }
    };
    for (const auto& t : positive) check(t);
    for (const auto& t : negative) check(t);
}

std::string token_fingerprint(std::span<const ConditioningToken> tokens) {
    std::set<std::string> names;
    for (const auto& t : tokens)
        if (t.role != TokenRole::structure) names.insert(t.name);
    std::string fp;
    for (const auto& n : names) {
        if (!fp.empty()) fp += "+";
        fp += n;
    }
    return fp;
}

MeanField MeanField::make_scalar(double v) {
    MeanField m;
    m.kind = Kind::scalar;
    m.values = {v};
    return m;
}

MeanField MeanField::make_per_channel(std::vector<double> v) {
    MeanField m;
    m.kind = Kind::per_channel;
    m.channels = static_cast<int>(v.size());
    m.values = std::move(v);
    return m;
}

MeanField MeanField::make_field(int c, int h, int w, std::vector<double> v) {
    if (v.size() != static_cast<std::size_t>(c) * h * w)
        throw std::invalid_argument("MeanField: field size mismatch");
    MeanField m;
    m.kind = Kind::field;
    m.channels = c;
    m.height = h;
    m.width = w;
    m.values = std::move(v);
    return m;
}

double MeanField::at(int c, int h, int w) const {
    switch (kind) {
        case Kind::scalar: return values[0];
        case Kind::per_channel: return values[static_cast<std::size_t>(c)];
        case Kind::field:
            return values[(static_cast<std::size_t>(c) * height + h) * width + w];
    }
    return 0.0;
}

void MeanField::check_compatible(const MultiViewLatent& z, const std::string& fingerprint) const {
    if (kind == Kind::per_channel && channels != z.channels)
        throw std::invalid_argument("mean field for '" + fingerprint + "' has " +
                                    std::to_string(channels) + " channels, latent has " +
                                    std::to_string(z.channels));
    if (kind == Kind::field &&
        (channels != z.channels || height != z.height || width != z.width))
        throw std::invalid_argument("mean field for '" + fingerprint +
                                    "' shape does not match the latent");
}

GaussianToyDenoiser::GaussianToyDenoiser(NoiseSchedule schedule,
                                         std::map<std::string, MeanField> means)
    : schedule_(std::move(schedule)), means_(std::move(means)) {}

const MeanField& GaussianToyDenoiser::mean_for(const std::string& fingerprint) const {
    auto it = means_.find(fingerprint);
    if (it == means_.end())
        throw std::invalid_argument("GaussianToyDenoiser: no mean declared for fingerprint '" +
                                    fingerprint + "'");
    return it->second;
}

MultiViewLatent GaussianToyDenoiser::predict(const MultiViewLatent& z_t, int t,
                                             std::span<const ConditioningToken> tokens) const {
    const std::string fp = token_fingerprint(tokens);
    const MeanField& mu = mean_for(fp);
    mu.check_compatible(z_t, fp);
    const double ab = schedule_.alpha_bar_at(t);
    const double signal = std::sqrt(ab);
    const double inv_noise = 1.0 / std::sqrt(1.0 - ab);
    MultiViewLatent out(z_t.n_views, z_t.channels, z_t.height, z_t.width);
    for (int n = 0; n < z_t.n_views; ++n)
        for (int c = 0; c < z_t.channels; ++c)
            for (int h = 0; h < z_t.height; ++h)
                for (int w = 0; w < z_t.width; ++w)
                    out.at(n, c, h, w) = (z_t.at(n, c, h, w) - signal * mu.at(c, h, w)) * inv_noise;
    return out;
}

FrozenLinearDenoiser::FrozenLinearDenoiser(int channels, std::uint64_t mix_seed, double mix_scale,
                                           std::map<std::string, MeanField> biases)
    : channels_(channels), biases_(std::move(biases)) {
    if (channels < 1) throw std::invalid_argument("FrozenLinearDenoiser: channels must be >= 1");
    RandomStream rng(mix_seed);
    mix_.resize(static_cast<std::size_t>(channels) * channels);
    for (double& v : mix_) v = rng.next_normal() * mix_scale / std::sqrt(channels);
}

MultiViewLatent FrozenLinearDenoiser::predict(const MultiViewLatent& z_t, int /*t*/,
                                              std::span<const ConditioningToken> tokens) const {
    if (z_t.channels != channels_)
        throw std::invalid_argument("FrozenLinearDenoiser: built for " + std::to_string(channels_) +
                                    " channels, latent has " + std::to_string(z_t.channels));
    const std::string fp = token_fingerprint(tokens);
    auto it = biases_.find(fp);
    if (it == biases_.end())
        throw std::invalid_argument("FrozenLinearDenoiser: no bias declared for fingerprint '" +
                                    fp + "'");
    const MeanField& bias = it->second;
    bias.check_compatible(z_t, fp);
    MultiViewLatent out(z_t.n_views, z_t.channels, z_t.height, z_t.width);
    for (int n = 0; n < z_t.n_views; ++n)
        for (int h = 0; h < z_t.height; ++h)
            for (int w = 0; w < z_t.width; ++w)
                for (int c = 0; c < z_t.channels; ++c) {
                    double acc = bias.at(c, h, w);
                    for (int c2 = 0; c2 < channels_; ++c2)
                        acc += mix_[static_cast<std::size_t>(c) * channels_ + c2] * z_t.at(n, c2, h, w);
                    out.at(n, c, h, w) = acc;
                }
    return out;
}

MultiViewLatent cfg_combine(const MultiViewLatent& eps_neg, const MultiViewLatent& eps_pos,
                            double beta) {
    require_same_shape(eps_neg, eps_pos, "cfg_combine");
    if (!(beta >= 0.0))
        throw std::invalid_argument("cfg_combine: beta must be >= 0, got " + std::to_string(beta));
    if (beta == 0.0) return eps_neg;
    if (beta == 1.0) return eps_pos;
    MultiViewLatent out = eps_neg;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = eps_neg.data[i] + beta * (eps_pos.data[i] - eps_neg.data[i]);
    return out;
}

MultiViewLatent guided_predict(const Denoiser& denoiser, const MultiViewLatent& z_t, int t,
                               const ConditioningSpec& cond, double beta) {
    cond.validate();
    const MultiViewLatent eps_neg = denoiser.predict(z_t, t, cond.negative);
    const MultiViewLatent eps_pos = denoiser.predict(z_t, t, cond.positive);
    return cfg_combine(eps_neg, eps_pos, beta);
}

} // namespace splatstyle
