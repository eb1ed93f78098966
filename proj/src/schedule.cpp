#include "splatstyle/schedule.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace splatstyle {

namespace {

void check_t(int t, int total, const char* where) {
    if (t < 1 || t > total)
        throw std::invalid_argument(std::string(where) + ": timestep " + std::to_string(t) +
                                    " outside [1," + std::to_string(total) + "]");
}

} // namespace

double NoiseSchedule::beta_at(int t) const {
    check_t(t, total_steps, "beta_at");
    return beta[t - 1];
}

double NoiseSchedule::alpha_bar_at(int t) const {
    check_t(t, total_steps, "alpha_bar_at");
    return alpha_bar[t - 1];
}

NoiseSchedule build_schedule(int total_steps, double beta_start, double beta_end,
                             int num_timesteps, int t_min, int t_max) {
    if (total_steps < 1)
        throw std::invalid_argument("build_schedule: total_steps must be >= 1");
    if (!(beta_start > 0.0))
        throw std::invalid_argument("build_schedule: beta_start must be > 0");
    if (!(beta_start <= beta_end))
        throw std::invalid_argument("build_schedule: beta_start must be <= beta_end");
    if (!(beta_end < 1.0))
        throw std::invalid_argument("build_schedule: beta_end must be < 1");
    if (num_timesteps < 1)
        throw std::invalid_argument("build_schedule: num_timesteps must be >= 1");
    if (t_min < 1 || t_min > t_max || t_max > total_steps)
        throw std::invalid_argument("build_schedule: need 1 <= t_min <= t_max <= total_steps, got t_min=" +
                                    std::to_string(t_min) + " t_max=" + std::to_string(t_max));
    if (num_timesteps > t_max - t_min + 1)
        throw std::invalid_argument("build_schedule: num_timesteps=" + std::to_string(num_timesteps) +
                                    " cannot fit distinct timesteps in [" + std::to_string(t_min) +
                                    "," + std::to_string(t_max) + "]");

    NoiseSchedule s;
    s.total_steps = total_steps;
    s.beta.resize(total_steps);
    s.alpha_bar.resize(total_steps);
    double prod = 1.0;
    for (int i = 0; i < total_steps; ++i) {
        const double frac = total_steps == 1 ? 0.0
                                             : static_cast<double>(i) / static_cast<double>(total_steps - 1);
        s.beta[i] = beta_start + (beta_end - beta_start) * frac;
        prod *= 1.0 - s.beta[i];
        s.alpha_bar[i] = prod;
    }

    s.timestep_set.resize(num_timesteps);
    if (num_timesteps == 1) {
        s.timestep_set[0] = t_min;
    } else {
        const double step = static_cast<double>(t_max - t_min) / (num_timesteps - 1);
        for (int k = 0; k < num_timesteps; ++k)
            s.timestep_set[k] = static_cast<int>(std::lround(t_min + k * step));
    }
    return s;
}

NoiseSchedule build_schedule(const ScheduleParams& p) {
    return build_schedule(p.total_steps, p.beta_start, p.beta_end, p.num_timesteps, p.t_min, p.t_max);
}

MultiViewLatent ddim_noise(const MultiViewLatent& z0, int t, const MultiViewLatent& eps,
                           const NoiseSchedule& schedule) {
    check_t(t, schedule.total_steps, "ddim_noise");
    require_same_shape(z0, eps, "ddim_noise");
    const double ab = schedule.alpha_bar_at(t);
    const double signal = std::sqrt(ab);
    const double noise = std::sqrt(1.0 - ab);
    MultiViewLatent out = z0;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = signal * z0.data[i] + noise * eps.data[i];
    return out;
}

int sample_timestep(const NoiseSchedule& schedule, RandomStream& rng) {
    const auto& set = schedule.timestep_set;
    const std::int64_t idx = rng.next_int(0, static_cast<std::int64_t>(set.size()) - 1);
    return set[static_cast<std::size_t>(idx)];
}

} // namespace splatstyle
