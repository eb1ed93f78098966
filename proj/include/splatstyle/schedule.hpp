#pragma once

#include <vector>

#include "splatstyle/rng.hpp"
#include "splatstyle/tensor.hpp"

namespace splatstyle {

// Forward-noising schedule: per-step variances beta_t, cumulative signal
// retention alpha_bar_t, and the fixed discrete timestep set drawn from
// during optimization. Timesteps are 1-based in [1, T].
struct NoiseSchedule {
    int total_steps = 0;
    std::vector<double> beta;      // beta[t-1]
    std::vector<double> alpha_bar; // alpha_bar[t-1], strictly decreasing
    std::vector<int> timestep_set; // sorted, distinct, within [1, T]

    double beta_at(int t) const;
    double alpha_bar_at(int t) const;
};

struct ScheduleParams {
    int total_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    int num_timesteps = 10;
    int t_min = 20;
    int t_max = 980;
};

NoiseSchedule build_schedule(int total_steps, double beta_start, double beta_end,
                             int num_timesteps, int t_min, int t_max);
NoiseSchedule build_schedule(const ScheduleParams& p);

// z_t = sqrt(alpha_bar_t) * z0 + sqrt(1 - alpha_bar_t) * eps
MultiViewLatent ddim_noise(const MultiViewLatent& z0, int t, const MultiViewLatent& eps,
                           const NoiseSchedule& schedule);

int sample_timestep(const NoiseSchedule& schedule, RandomStream& rng);

} // namespace splatstyle
