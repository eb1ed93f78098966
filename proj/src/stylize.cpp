#include "splatstyle/stylize.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

#include "splatstyle/rng.hpp"

namespace splatstyle {

void RunConfig::validate(int total_cameras) const {
    if (iterations < 1) throw std::invalid_argument("run: iterations must be >= 1");
    if (views_per_step < 1 || views_per_step > total_cameras)
        throw std::invalid_argument("run: views_per_step must be in [1, cameras], got " +
                                    std::to_string(views_per_step) + " with " +
                                    std::to_string(total_cameras) + " cameras");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("run: learning_rate must be > 0");
    if (snapshot_every < 0) throw std::invalid_argument("run: snapshot_every must be >= 0");
    distill.validate();
    if (!(cutoff_d0 > 0.0)) throw std::invalid_argument("run: cutoff_d0 must be > 0");
}

std::array<double, 3> mean_rgb(const MultiViewLatent& stack) {
    if (stack.channels != 3) throw std::invalid_argument("mean_rgb: stack must have 3 channels");
    std::array<double, 3> out{0.0, 0.0, 0.0};
    const std::size_t per_plane = static_cast<std::size_t>(stack.height) * stack.width;
    for (int n = 0; n < stack.n_views; ++n)
        for (int c = 0; c < 3; ++c) {
            const double* p = stack.data.data() +
                              (static_cast<std::size_t>(n) * 3 + c) * per_plane;
            for (std::size_t i = 0; i < per_plane; ++i) out[c] += p[i];
        }
    const double denom = static_cast<double>(stack.n_views) * per_plane;
    for (double& v : out) v /= denom;
    return out;
}

ConsistencyTable consistency_metrics(const MultiViewLatent& renders, double cutoff_d0) {
    if (renders.n_views < 2)
        throw std::invalid_argument("consistency_metrics: need at least 2 views");
    ConsistencyTable table;
    const int n = renders.n_views;

    double short_sum = 0.0;
    for (int i = 0; i + 1 < n; ++i) short_sum += rmse_views(renders, i, i + 1);
    table.short_range_rmse = short_sum / (n - 1);

    const int half = n / 2;
    double long_sum = 0.0;
    int long_count = 0;
    for (int i = 0; i + half < n; ++i) {
        long_sum += rmse_views(renders, i, i + half);
        ++long_count;
    }
    table.long_range_rmse = long_count > 0 ? long_sum / long_count : table.short_range_rmse;
    table.render_low_band_mean_variance = cross_view_low_band_mean_variance(renders, cutoff_d0);
    return table;
}

namespace {

struct AdamState {
    std::vector<double> m1, m2;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    int step = 0;
};

void check_finite(const MultiViewLatent& x, int iter, const char* field) {
    if (!x.all_finite())
        throw StylizeAbort(iter, field,
                           "stylize: non-finite values in '" + std::string(field) +
                               "' at iteration " + std::to_string(iter));
}

void check_finite(const std::vector<double>& x, int iter, const char* field) {
    for (double v : x)
        if (!std::isfinite(v))
            throw StylizeAbort(iter, field,
                               "stylize: non-finite values in '" + std::string(field) +
                                   "' at iteration " + std::to_string(iter));
}

MultiViewLatent gather_views(const MultiViewLatent& stack, const std::vector<int>& views) {
    MultiViewLatent out(static_cast<int>(views.size()), stack.channels, stack.height, stack.width);
    const std::size_t per_view =
        static_cast<std::size_t>(stack.channels) * stack.height * stack.width;
    for (std::size_t i = 0; i < views.size(); ++i)
        std::copy(stack.data.begin() + views[i] * per_view,
                  stack.data.begin() + (views[i] + 1) * per_view, out.data.begin() + i * per_view);
    return out;
}

Image view_image(const MultiViewLatent& stack, int view) {
    Image out(stack.channels, stack.height, stack.width);
    const std::size_t per_view = out.size();
    std::copy(stack.data.begin() + view * per_view, stack.data.begin() + (view + 1) * per_view,
              out.data.begin());
    return out;
}

} // namespace

RunReport stylize(GaussianScene& scene, const Denoiser& denoiser,
                  const ConditioningSpec& cond_tgt, const ConditioningSpec& cond_src,
                  const RunConfig& cfg, const SnapshotSink& snapshot) {
    using clock = std::chrono::steady_clock;
    const auto run_start = clock::now();

    scene.validate();
    const int n_cameras = static_cast<int>(scene.cameras.size());
    cfg.validate(n_cameras);
    cond_tgt.validate();
    cond_src.validate();
    for (const auto& cam : scene.cameras)
        if (cam.width != scene.cameras[0].width || cam.height != scene.cameras[0].height)
            throw std::invalid_argument(
                "stylize: all cameras must share one resolution to stack views");

    const NoiseSchedule schedule = build_schedule(cfg.schedule);
    const std::vector<SplatWeights> weights = bake_all(scene);

    // Source pathway: cached once and frozen.
    const MultiViewLatent source_stack = render_all(scene, weights);
    if (snapshot && cfg.snapshot_every > 0) snapshot(0, source_stack);

    SeedSplitter split(cfg.seed);
    RandomStream t_stream = split.stream("timesteps");
    RandomStream eps_stream = split.stream("eps");
    RandomStream shared_stream = split.stream("eps_shared");

    const int n_batch = cfg.views_per_step;
    const FrequencyMask batch_mask =
        make_highpass(n_batch, scene.cameras[0].height, scene.cameras[0].width, cfg.cutoff_d0);

    const int basis = scene.basis();
    const std::size_t n_params = scene.sh_coeffs.size();
    AdamState adam;
    if (cfg.optimizer == OptimizerKind::adaptive_moments) {
        adam.m1.assign(n_params, 0.0);
        adam.m2.assign(n_params, 0.0);
    }

    RunReport report;
    report.mean_rgb_initial = mean_rgb(source_stack);
    report.rows.reserve(cfg.iterations);

    std::vector<double> grad(n_params);
    for (int iter = 1; iter <= cfg.iterations; ++iter) {
        const auto iter_start = clock::now();

        std::vector<int> batch(n_batch);
        const int start = ((iter - 1) * n_batch) % n_cameras;
        for (int i = 0; i < n_batch; ++i) batch[i] = (start + i) % n_cameras;

        const int t = sample_timestep(schedule, t_stream);
        MultiViewLatent eps(n_batch, 3, scene.cameras[0].height, scene.cameras[0].width);
        eps_stream.fill_normal(eps);
        Image shared_slice(3, scene.cameras[0].height, scene.cameras[0].width);
        shared_stream.fill_normal(shared_slice);
        const MultiViewLatent eps_shared = replicate_view(shared_slice, n_batch);

        std::vector<Image> target_views;
        target_views.reserve(n_batch);
        for (int v : batch) target_views.push_back(render(scene, weights[v]));
        const MultiViewLatent target_stack = stack_views(target_views);
        const MultiViewLatent source_batch = gather_views(source_stack, batch);

        const LatentPair pair(source_batch, target_stack);
        const ScoreDelta delta =
            csd_delta(denoiser, pair, t, eps, eps_shared, cond_tgt, cond_src, cfg.distill,
                      schedule, batch_mask);
        check_finite(delta.value, iter, "delta");
        const double delta_norm = l2_norm(delta.value);
        if (delta_norm > 1e6)
            throw StylizeAbort(iter, "delta",
                               "stylize: divergence guard tripped (|delta| = " +
                                   std::to_string(delta_norm) + ") at iteration " +
                                   std::to_string(iter));

        MultiViewLatent field = apply_omega(delta, schedule, cfg.distill);
        if (cfg.mvfc_backward == MvfcBackward::filtered)
            field = band_scale(field, batch_mask, cfg.distill.gamma, 1.0);

        // Pull back through sqrt(alpha_bar)*J_render, averaged over the batch.
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int i = 0; i < n_batch; ++i) {
            const std::vector<double> g =
                render_vjp(scene, weights[batch[i]], view_image(field, i));
            for (std::size_t k = 0; k < n_params; ++k) grad[k] += g[k];
        }
        const double pull = std::sqrt(schedule.alpha_bar_at(t)) / n_batch;
        for (double& g : grad) g *= pull;
        if (cfg.freeze_high_degrees && basis > 1) {
            for (int j = 0; j < scene.count(); ++j)
                for (int b = 1; b < basis; ++b)
                    for (int c = 0; c < 3; ++c) grad[scene.coeff_index(j, b, c)] = 0.0;
        }
        check_finite(grad, iter, "sh_grad");

        if (cfg.optimizer == OptimizerKind::plain_descent) {
            for (std::size_t k = 0; k < n_params; ++k)
                scene.sh_coeffs[k] -= cfg.learning_rate * grad[k];
        } else {
            adam.step += 1;
            const double c1 = 1.0 - std::pow(adam.beta1, adam.step);
            const double c2 = 1.0 - std::pow(adam.beta2, adam.step);
            for (std::size_t k = 0; k < n_params; ++k) {
                adam.m1[k] = adam.beta1 * adam.m1[k] + (1.0 - adam.beta1) * grad[k];
                adam.m2[k] = adam.beta2 * adam.m2[k] + (1.0 - adam.beta2) * grad[k] * grad[k];
                const double mhat = adam.m1[k] / c1;
                const double vhat = adam.m2[k] / c2;
                scene.sh_coeffs[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + adam.eps);
            }
        }
        check_finite(scene.sh_coeffs, iter, "sh_coeffs");

        IterationRecord row;
        row.iteration = iter;
        row.timestep = t;
        row.delta_norm = delta_norm;
        row.view_rmse.resize(n_batch);
        for (int i = 0; i < n_batch; ++i)
            row.view_rmse[i] = rmse(target_views[i], view_image(source_stack, batch[i]));
        row.wall_ms =
            std::chrono::duration<double, std::milli>(clock::now() - iter_start).count();
        report.rows.push_back(std::move(row));

        if (snapshot && cfg.snapshot_every > 0 && iter % cfg.snapshot_every == 0)
            snapshot(iter, render_all(scene, weights));
    }

    const MultiViewLatent final_stack = render_all(scene, weights);
    report.mean_rgb_final = mean_rgb(final_stack);

    ConsistencyTable table = n_cameras >= 2 ? consistency_metrics(final_stack, cfg.cutoff_d0)
                                            : ConsistencyTable{};
    table.gamma = cfg.distill.gamma;

    // Deterministic latent probe: noise the final renders, apply the filter
    // with the run's gamma, and measure cross-view statistics. Probe streams
    // depend only on the seed, so paired ablation arms see identical draws.
    {
        RandomStream probe_t = split.stream("probe_timestep");
        RandomStream probe_eps = split.stream("probe_eps");
        RandomStream probe_shared = split.stream("probe_eps_shared");
        const int tp = sample_timestep(schedule, probe_t);
        MultiViewLatent eps(final_stack.n_views, 3, final_stack.height, final_stack.width);
        probe_eps.fill_normal(eps);
        Image shared_slice(3, final_stack.height, final_stack.width);
        probe_shared.fill_normal(shared_slice);
        const MultiViewLatent eps_shared = replicate_view(shared_slice, final_stack.n_views);

        const FrequencyMask full_mask =
            make_highpass(final_stack.n_views, final_stack.height, final_stack.width, cfg.cutoff_d0);
        const MultiViewLatent z_t = ddim_noise(final_stack, tp, eps, schedule);
        const MultiViewLatent z_hat = mvfc(z_t, eps_shared, cfg.distill.gamma, full_mask);

        table.probe_timestep = tp;
        table.latent_low_band_mean_variance_unfiltered =
            cross_view_low_band_mean_variance(z_t, cfg.cutoff_d0);
        table.latent_low_band_mean_variance_filtered =
            cross_view_low_band_mean_variance(z_hat, cfg.cutoff_d0);
        table.latent_low_band_energy_filtered = band_energy(z_hat, full_mask, false);
        table.latent_high_band_energy_filtered = band_energy(z_hat, full_mask, true);
    }
    report.consistency = table;
    report.total_wall_ms =
        std::chrono::duration<double, std::milli>(clock::now() - run_start).count();
    return report;
}

std::string report_rows_to_jsonl(const RunReport& report) {
    std::string out;
    for (const auto& row : report.rows) {
        nlohmann::json j;
        j["iteration"] = row.iteration;
        j["timestep"] = row.timestep;
        j["delta_norm"] = row.delta_norm;
        j["view_rmse"] = row.view_rmse;
        out += j.dump();
        out += "\n";
    }
    return out;
}

std::string report_summary_to_json(const RunReport& report) {
    const ConsistencyTable& t = report.consistency;
    nlohmann::json j;
    j["iterations"] = report.rows.size();
    j["mean_rgb_initial"] = report.mean_rgb_initial;
    j["mean_rgb_final"] = report.mean_rgb_final;
    j["consistency"] = {
        {"short_range_rmse", t.short_range_rmse},
        {"long_range_rmse", t.long_range_rmse},
        {"render_low_band_mean_variance", t.render_low_band_mean_variance},
        {"probe_timestep", t.probe_timestep},
        {"gamma", t.gamma},
        {"latent_low_band_mean_variance_filtered", t.latent_low_band_mean_variance_filtered},
        {"latent_low_band_mean_variance_unfiltered", t.latent_low_band_mean_variance_unfiltered},
        {"latent_low_band_energy_filtered", t.latent_low_band_energy_filtered},
        {"latent_high_band_energy_filtered", t.latent_high_band_energy_filtered},
    };
    return j.dump(2) + "\n";
}

} // namespace splatstyle
