#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "splatstyle/distill.hpp"
#include "splatstyle/scene.hpp"

namespace splatstyle {

enum class OptimizerKind { plain_descent, adaptive_moments };
enum class MvfcBackward { identity, filtered };

struct RunConfig {
    int iterations = 300;
    int views_per_step = 4;
    double learning_rate = 0.01;
    OptimizerKind optimizer = OptimizerKind::adaptive_moments;
    DistillConfig distill;
    double cutoff_d0 = 0.25;
    ScheduleParams schedule;
    int snapshot_every = 0; // 0 disables snapshots
    std::uint64_t seed = 0;
    MvfcBackward mvfc_backward = MvfcBackward::identity;
    bool freeze_high_degrees = false;

    void validate(int total_cameras) const;
};

struct IterationRecord {
    int iteration = 0;
    int timestep = 0;
    double delta_norm = 0.0;
    std::vector<double> view_rmse; // batch views vs. the cached source renders
    double wall_ms = 0.0;          // diagnostic only; never serialized
};

// Cross-view consistency statistics. The render statistics are computed on
// the final renders; the latent statistics on a deterministic noised-and-
// filtered probe of them, which is where the frequency blend acts.
struct ConsistencyTable {
    double short_range_rmse = 0.0; // mean RMSE over adjacent camera pairs
    double long_range_rmse = 0.0;  // mean RMSE over half-separation pairs
    double render_low_band_mean_variance = 0.0;
    int probe_timestep = 0;
    double gamma = 1.0;
    double latent_low_band_mean_variance_filtered = 0.0;
    double latent_low_band_mean_variance_unfiltered = 0.0;
    double latent_low_band_energy_filtered = 0.0;
    double latent_high_band_energy_filtered = 0.0;
};

struct RunReport {
    std::vector<IterationRecord> rows;
    ConsistencyTable consistency;
    std::array<double, 3> mean_rgb_initial{};
    std::array<double, 3> mean_rgb_final{};
    double total_wall_ms = 0.0; // diagnostic only; never serialized
};

// Thrown when the loop hits a non-finite field or the divergence guard.
struct StylizeAbort : std::runtime_error {
    StylizeAbort(int iter, std::string field_name, const std::string& what)
        : std::runtime_error(what), iteration(iter), field(std::move(field_name)) {}
    int iteration;
    std::string field;
};

using SnapshotSink = std::function<void(int iteration, const MultiViewLatent& renders)>;

// Runs the full optimization over scene.sh_coeffs; geometry is untouched.
// Deterministic under cfg.seed. Snapshot 0 carries the cached source renders.
RunReport stylize(GaussianScene& scene, const Denoiser& denoiser,
                  const ConditioningSpec& cond_tgt, const ConditioningSpec& cond_src,
                  const RunConfig& cfg, const SnapshotSink& snapshot = {});

// Render-side consistency statistics for a >= 2 view stack.
ConsistencyTable consistency_metrics(const MultiViewLatent& renders, double cutoff_d0);

std::array<double, 3> mean_rgb(const MultiViewLatent& stack);

// Deterministic serializations (no timing fields).
std::string report_rows_to_jsonl(const RunReport& report);
std::string report_summary_to_json(const RunReport& report);

} // namespace splatstyle
