#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "splatstyle/config.hpp"
#include "splatstyle/io.hpp"
#include "splatstyle/rng.hpp"
#include "splatstyle/scene.hpp"
#include "splatstyle/spectral.hpp"
#include "splatstyle/stylize.hpp"

namespace {

using namespace splatstyle;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void write_text(const std::string& path, const std::string& text) {
    write_file_bytes(path, text.data(), text.size());
}

int cmd_make_scene(std::uint64_t seed, int gaussians, int cameras, int width, int height,
                   int sh_degree, const std::string& out) {
    auto [scene, weights] = make_synthetic_scene(seed, gaussians, cameras, height, width, sh_degree);
    (void)weights;
    save_scene(scene, out);
    std::cerr << "wrote " << out << " (" << gaussians << " gaussians, " << cameras << " cameras)\n";
    return kExitOk;
}

int cmd_render(const std::string& scene_path, const std::string& prefix, int camera,
               const std::string& stack_out) {
    const GaussianScene scene = load_scene(scene_path);
    std::vector<Image> images;
    if (camera >= 0) {
        if (camera >= static_cast<int>(scene.cameras.size()))
            throw std::invalid_argument("--camera out of range");
        images.push_back(render(scene, bake_weights(scene, camera)));
    } else {
        for (int i = 0; i < static_cast<int>(scene.cameras.size()); ++i)
            images.push_back(render(scene, bake_weights(scene, i)));
    }
    const MultiViewLatent stack = stack_views(images);
    export_png_views(stack, prefix);
    if (!stack_out.empty()) save_stack(stack, stack_out);
    return kExitOk;
}

int cmd_filter(const std::string& input, const std::string& output, double gamma, double cutoff,
               std::uint64_t seed) {
    const MultiViewLatent stack = load_stack(input);
    const FrequencyMask mask = make_highpass(stack.n_views, stack.height, stack.width, cutoff);
    RandomStream shared = SeedSplitter(seed).stream("eps_shared");
    Image slice(stack.channels, stack.height, stack.width);
    shared.fill_normal(slice);
    const MultiViewLatent filtered = mvfc(stack, replicate_view(slice, stack.n_views), gamma, mask);
    save_stack(filtered, output);
    return kExitOk;
}

int cmd_analyze_freq(const std::string& input, const std::vector<double>& alphas,
                     const std::vector<double>& gammas, double cutoff, std::uint64_t seed,
                     const std::string& report_path, const std::string& prefix) {
    const MultiViewLatent stack = load_stack(input);
    const FrequencyMask mask = make_highpass(stack.n_views, stack.height, stack.width, cutoff);

    nlohmann::json report;
    report["input"] = input;
    report["cutoff_d0"] = cutoff;
    report["input_stats"] = {
        {"low_band_energy", band_energy(stack, mask, false)},
        {"high_band_energy", band_energy(stack, mask, true)},
        {"cross_view_low_band_mean_variance", cross_view_low_band_mean_variance(stack, cutoff)}};
    nlohmann::json rows = nlohmann::json::array();

    int idx = 0;
    auto add_row = [&](const std::string& form, double param, const MultiViewLatent& out) {
        char name[64];
        std::snprintf(name, sizeof(name), "_%s_%03d.mvlt", form.c_str(), idx);
        const std::string path = prefix + name;
        save_stack(out, path);
        rows.push_back({{"form", form},
                        {form == "mvfc" ? "gamma" : "alpha", param},
                        {"low_band_energy", band_energy(out, mask, false)},
                        {"high_band_energy", band_energy(out, mask, true)},
                        {"cross_view_low_band_mean_variance",
                         cross_view_low_band_mean_variance(out, cutoff)},
                        {"max_abs_deviation_from_input", max_abs(sub(out, stack))},
                        {"output", path}});
        ++idx;
    };

    for (double alpha : alphas) {
        add_row("low_scaled", alpha, band_scale(stack, mask, alpha, 1.0));
        add_row("high_scaled", alpha, band_scale(stack, mask, 1.0, alpha));
    }
    if (!gammas.empty()) {
        RandomStream shared = SeedSplitter(seed).stream("eps_shared");
        Image slice(stack.channels, stack.height, stack.width);
        shared.fill_normal(slice);
        const MultiViewLatent eps_shared = replicate_view(slice, stack.n_views);
        for (double gamma : gammas) add_row("mvfc", gamma, mvfc(stack, eps_shared, gamma, mask));
    }
    report["rows"] = rows;
    write_text(report_path, report.dump(2) + "\n");
    return kExitOk;
}

int cmd_stylize(const std::string& config_path, bool dry_run) {
    StylizeSetup setup = load_config_file(config_path);
    GaussianScene scene = load_scene(setup.paths.scene);
    setup.run.validate(static_cast<int>(scene.cameras.size()));
    if (dry_run) {
        std::cerr << "config ok: " << config_path << "\n";
        return kExitOk;
    }

    const std::vector<SplatWeights> weights = bake_all(scene);
    const MultiViewLatent before = render_all(scene, weights);
    export_png_views(before, setup.paths.renders_prefix + "_before");

    SnapshotSink sink;
    if (setup.run.snapshot_every > 0) {
        sink = [&](int iteration, const MultiViewLatent& renders) {
            char name[64];
            std::snprintf(name, sizeof(name), "_snap%06d.mvlt", iteration);
            save_stack(renders, setup.paths.renders_prefix + name);
        };
    }

    const RunReport report =
        stylize(scene, *setup.denoiser, setup.cond_tgt, setup.cond_src, setup.run, sink);

    save_scene(scene, setup.paths.output_scene);
    write_text(setup.paths.report, report_rows_to_jsonl(report));
    write_text(setup.paths.summary, report_summary_to_json(report));
    export_png_views(render_all(scene, weights), setup.paths.renders_prefix + "_after");
    std::cerr << "stylize finished in " << report.total_wall_ms / 1000.0 << " s\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D gaussian appearance stylization via score distillation"};
    app.require_subcommand(1);

    // make-scene
    auto* make = app.add_subcommand("make-scene", "Synthesize a random fixed-geometry scene");
    std::uint64_t ms_seed = 7;
    int ms_gaussians = 200, ms_cameras = 8, ms_width = 64, ms_height = 64, ms_degree = 3;
    std::string ms_out = "scene.fsz";
    make->add_option("--seed", ms_seed, "RNG seed");
    make->add_option("--gaussians", ms_gaussians, "number of gaussians")->check(CLI::PositiveNumber);
    make->add_option("--cameras", ms_cameras, "number of cameras")->check(CLI::PositiveNumber);
    make->add_option("--width", ms_width, "image width")->check(CLI::PositiveNumber);
    make->add_option("--height", ms_height, "image height")->check(CLI::PositiveNumber);
    make->add_option("--sh-degree", ms_degree, "SH degree 0..3")->check(CLI::Range(0, 3));
    make->add_option("--out", ms_out, "output scene file");

    // render
    auto* rend = app.add_subcommand("render", "Render a scene to PNGs (and optionally a stack)");
    std::string r_scene = "scene.fsz", r_prefix = "render", r_stack;
    int r_camera = -1;
    rend->add_option("--scene", r_scene, "scene file");
    rend->add_option("--out-prefix", r_prefix, "PNG path prefix");
    rend->add_option("--camera", r_camera, "render a single camera index");
    rend->add_option("--stack", r_stack, "also save the rendered stack (mvlt)");

    // filter
    auto* filt = app.add_subcommand("filter", "Apply the multi-view frequency filter to a stack");
    std::string f_in, f_out = "filtered.mvlt";
    double f_gamma = 0.9, f_cutoff = 0.25;
    std::uint64_t f_seed = 7;
    filt->add_option("--input", f_in, "input stack (mvlt)")->required();
    filt->add_option("--output", f_out, "output stack (mvlt)");
    filt->add_option("--gamma", f_gamma, "low-band blend in [0,1]");
    filt->add_option("--cutoff", f_cutoff, "normalized cutoff d0");
    filt->add_option("--seed", f_seed, "seed for the shared noise");

    // analyze-freq
    auto* an = app.add_subcommand("analyze-freq", "Band-scaling sweep and report over a stack");
    std::string a_in, a_report = "freq_report.json", a_prefix = "freq";
    std::vector<double> a_alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> a_gammas;
    double a_cutoff = 0.25;
    std::uint64_t a_seed = 7;
    an->add_option("--input", a_in, "input stack (mvlt)")->required();
    an->add_option("--alphas", a_alphas, "band scaling factors to sweep");
    an->add_option("--gammas", a_gammas, "optional filter blends to sweep");
    an->add_option("--cutoff", a_cutoff, "normalized cutoff d0");
    an->add_option("--seed", a_seed, "seed for the shared noise");
    an->add_option("--report", a_report, "JSON report path");
    an->add_option("--out-prefix", a_prefix, "filtered stack path prefix");

    // stylize
    auto* st = app.add_subcommand("stylize", "Run the full stylization loop from a config");
    std::string s_config;
    bool s_dry = false;
    st->add_option("--config", s_config, "JSON config path")->required();
    st->add_flag("--dry-run", s_dry, "validate the config and exit without writing");

    // defaults
    auto* de = app.add_subcommand("defaults", "Print the default config JSON");
    std::string d_out;
    de->add_option("--out", d_out, "write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (make->parsed())
            return cmd_make_scene(ms_seed, ms_gaussians, ms_cameras, ms_width, ms_height, ms_degree,
                                  ms_out);
        if (rend->parsed()) return cmd_render(r_scene, r_prefix, r_camera, r_stack);
        if (filt->parsed()) return cmd_filter(f_in, f_out, f_gamma, f_cutoff, f_seed);
        if (an->parsed())
            return cmd_analyze_freq(a_in, a_alphas, a_gammas, a_cutoff, a_seed, a_report, a_prefix);
        if (st->parsed()) return cmd_stylize(s_config, s_dry);
        if (de->parsed()) {
            const std::string text = default_config_json().dump(2) + "\n";
            if (d_out.empty()) std::cout << text;
            else write_text(d_out, text);
            return kExitOk;
        }
    } catch (const StylizeAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
