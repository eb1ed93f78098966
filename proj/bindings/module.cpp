#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "splatstyle/config.hpp"
#include "splatstyle/io.hpp"
#include "splatstyle/stylize.hpp"

namespace py = pybind11;
using namespace splatstyle;

namespace {

MultiViewLatent stack_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 4) throw std::invalid_argument("expected a [N,C,H,W] array");
    MultiViewLatent out(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
                        static_cast<int>(arr.shape(2)), static_cast<int>(arr.shape(3)));
    std::copy(arr.data(), arr.data() + arr.size(), out.data.begin());
    return out;
}

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 3) throw std::invalid_argument("expected a [C,H,W] array");
    Image out(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)),
              static_cast<int>(arr.shape(2)));
    std::copy(arr.data(), arr.data() + arr.size(), out.data.begin());
    return out;
}

py::array_t<double> array_from_stack(const MultiViewLatent& stack) {
    py::array_t<double> out({stack.n_views, stack.channels, stack.height, stack.width});
    std::copy(stack.data.begin(), stack.data.end(), out.mutable_data());
    return out;
}

py::array_t<double> array_from_image(const Image& im) {
    py::array_t<double> out({im.channels, im.height, im.width});
    std::copy(im.data.begin(), im.data.end(), out.mutable_data());
    return out;
}

ConditioningSpec spec_from_lists(const std::vector<std::pair<std::string, std::string>>& positive,
                                 const std::vector<std::pair<std::string, std::string>>& negative) {
    ConditioningSpec spec;
    for (const auto& [name, role] : positive)
        spec.positive.push_back({name, token_role_from_name(role), {1.0}});
    for (const auto& [name, role] : negative)
        spec.negative.push_back({name, token_role_from_name(role), {1.0}});
    return spec;
}

std::map<std::string, MeanField> means_from_dict(const py::dict& d) {
    std::map<std::string, MeanField> out;
    for (const auto& item : d) {
        const std::string key = py::cast<std::string>(item.first);
        if (py::isinstance<py::float_>(item.second) || py::isinstance<py::int_>(item.second)) {
            out.emplace(key, MeanField::make_scalar(py::cast<double>(item.second)));
        } else {
            out.emplace(key, MeanField::make_per_channel(
                                 py::cast<std::vector<double>>(item.second)));
        }
    }
    return out;
}

// Scene plus its baked weights; sh_coeffs edits do not invalidate the bake.
struct PyScene {
    GaussianScene scene;
    std::vector<SplatWeights> weights;

    explicit PyScene(GaussianScene s) : scene(std::move(s)), weights(bake_all(scene)) {}

    py::array_t<double> render_one(int camera) const {
        if (camera < 0 || camera >= static_cast<int>(weights.size()))
            throw std::invalid_argument("camera index out of range");
        return array_from_image(render(scene, weights[camera]));
    }
    py::array_t<double> render_all_views() const {
        return array_from_stack(render_all(scene, weights));
    }
    py::array_t<double> vjp(int camera, const py::array_t<double>& cot) const {
        if (camera < 0 || camera >= static_cast<int>(weights.size()))
            throw std::invalid_argument("camera index out of range");
        const auto grad = render_vjp(scene, weights[camera], image_from_array(cot));
        py::array_t<double> out({scene.count(), scene.basis(), 3});
        std::copy(grad.begin(), grad.end(), out.mutable_data());
        return out;
    }
    py::array_t<double> get_sh() const {
        py::array_t<double> out({scene.count(), scene.basis(), 3});
        std::copy(scene.sh_coeffs.begin(), scene.sh_coeffs.end(), out.mutable_data());
        return out;
    }
    void set_sh(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
        if (static_cast<std::size_t>(arr.size()) != scene.sh_coeffs.size())
            throw std::invalid_argument("sh_coeffs size mismatch");
        std::copy(arr.data(), arr.data() + arr.size(), scene.sh_coeffs.begin());
    }
};

py::dict run_stylize(PyScene& scene, const std::string& config_json) {
    const StylizeSetup setup = parse_config_json(nlohmann::json::parse(config_json));
    RunConfig cfg = setup.run;
    const RunReport report =
        stylize(scene.scene, *setup.denoiser, setup.cond_tgt, setup.cond_src, cfg);
    py::dict out;
    out["report_jsonl"] = report_rows_to_jsonl(report);
    out["summary_json"] = report_summary_to_json(report);
    out["mean_rgb_initial"] = report.mean_rgb_initial;
    out["mean_rgb_final"] = report.mean_rgb_final;
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multi-view frequency-consistent score distillation for splat scenes";

    // spectral
    m.def("fft3", [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        const Spectrum s = fft3(stack_from_array(x));
        py::array_t<std::complex<double>> out({s.n_views, s.channels, s.height, s.width});
        std::copy(s.data.begin(), s.data.end(), out.mutable_data());
        return out;
    });
    m.def("ifft3", [](const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& x) {
        if (x.ndim() != 4) throw std::invalid_argument("expected a [N,C,H,W] complex array");
        Spectrum s;
        s.n_views = static_cast<int>(x.shape(0));
        s.channels = static_cast<int>(x.shape(1));
        s.height = static_cast<int>(x.shape(2));
        s.width = static_cast<int>(x.shape(3));
        s.data.assign(x.data(), x.data() + x.size());
        return array_from_stack(ifft3(s));
    });
    m.def("make_highpass", [](int n, int h, int w, double d0) {
        const FrequencyMask mask = make_highpass(n, h, w, d0);
        py::array_t<double> out({n, h, w});
        std::copy(mask.values.begin(), mask.values.end(), out.mutable_data());
        return out;
    }, py::arg("n_views"), py::arg("height"), py::arg("width"), py::arg("d0") = 0.25);
    m.def("band_scale", [](const py::array_t<double>& x, double alpha_low, double alpha_high, double d0) {
        const MultiViewLatent stack = stack_from_array(x);
        const FrequencyMask mask = make_highpass(stack.n_views, stack.height, stack.width, d0);
        return array_from_stack(band_scale(stack, mask, alpha_low, alpha_high));
    }, py::arg("x"), py::arg("alpha_low"), py::arg("alpha_high"), py::arg("d0") = 0.25);
    m.def("mvfc", [](const py::array_t<double>& z, const py::array_t<double>& eps_shared,
                     double gamma, double d0) {
        const MultiViewLatent stack = stack_from_array(z);
        const FrequencyMask mask = make_highpass(stack.n_views, stack.height, stack.width, d0);
        MultiViewLatent eps = eps_shared.ndim() == 3
                                  ? replicate_view(image_from_array(eps_shared), stack.n_views)
                                  : stack_from_array(eps_shared);
        return array_from_stack(mvfc(stack, eps, gamma, mask));
    }, py::arg("z_t"), py::arg("eps_shared"), py::arg("gamma") = 0.9, py::arg("d0") = 0.25);

    // schedule
    py::class_<NoiseSchedule>(m, "NoiseSchedule")
        .def_readonly("total_steps", &NoiseSchedule::total_steps)
        .def_readonly("alpha_bar", &NoiseSchedule::alpha_bar)
        .def_readonly("beta", &NoiseSchedule::beta)
        .def_readonly("timestep_set", &NoiseSchedule::timestep_set)
        .def("alpha_bar_at", &NoiseSchedule::alpha_bar_at);
    m.def("build_schedule",
          py::overload_cast<int, double, double, int, int, int>(&build_schedule),
          py::arg("total_steps") = 1000, py::arg("beta_start") = 1e-4, py::arg("beta_end") = 0.02,
          py::arg("num_timesteps") = 10, py::arg("t_min") = 20, py::arg("t_max") = 980);
    m.def("ddim_noise", [](const py::array_t<double>& z0, int t, const py::array_t<double>& eps,
                           const NoiseSchedule& s) {
        return array_from_stack(ddim_noise(stack_from_array(z0), t, stack_from_array(eps), s));
    });
    m.def("sample_timesteps", [](const NoiseSchedule& s, std::uint64_t seed, int count) {
        RandomStream rng = SeedSplitter(seed).stream("timesteps");
        std::vector<int> out(static_cast<std::size_t>(count));
        for (auto& v : out) v = sample_timestep(s, rng);
        return out;
    }, py::arg("schedule"), py::arg("seed"), py::arg("count") = 1);

    // guidance + distillation
    py::class_<Denoiser, std::shared_ptr<Denoiser>>(m, "Denoiser");
    py::class_<GaussianToyDenoiser, Denoiser, std::shared_ptr<GaussianToyDenoiser>>(
        m, "GaussianToyDenoiser")
        .def(py::init([](const NoiseSchedule& s, const py::dict& means) {
            return std::make_shared<GaussianToyDenoiser>(s, means_from_dict(means));
        }), py::arg("schedule"), py::arg("means"));
    py::class_<FrozenLinearDenoiser, Denoiser, std::shared_ptr<FrozenLinearDenoiser>>(
        m, "FrozenLinearDenoiser")
        .def(py::init([](int channels, std::uint64_t mix_seed, double mix_scale,
                         const py::dict& biases) {
            return std::make_shared<FrozenLinearDenoiser>(channels, mix_seed, mix_scale,
                                                          means_from_dict(biases));
        }), py::arg("channels"), py::arg("mix_seed"), py::arg("mix_scale"), py::arg("biases"));

    m.def("cfg_combine", [](const py::array_t<double>& neg, const py::array_t<double>& pos,
                            double beta) {
        return array_from_stack(cfg_combine(stack_from_array(neg), stack_from_array(pos), beta));
    });
    m.def("guided_predict",
          [](const Denoiser& d, const py::array_t<double>& z, int t,
             const std::vector<std::pair<std::string, std::string>>& positive,
             const std::vector<std::pair<std::string, std::string>>& negative, double beta) {
              return array_from_stack(
                  guided_predict(d, stack_from_array(z), t, spec_from_lists(positive, negative), beta));
          },
          py::arg("denoiser"), py::arg("z_t"), py::arg("t"), py::arg("positive"),
          py::arg("negative"), py::arg("beta"));
    m.def("csd_delta",
          [](const Denoiser& d, const py::array_t<double>& source, const py::array_t<double>& target,
             int t, const py::array_t<double>& eps, const py::array_t<double>& eps_shared,
             const std::vector<std::pair<std::string, std::string>>& tgt_positive,
             const std::vector<std::pair<std::string, std::string>>& tgt_negative,
             const std::vector<std::pair<std::string, std::string>>& src_positive,
             const std::vector<std::pair<std::string, std::string>>& src_negative, double beta,
             double gamma, double d0, const NoiseSchedule& schedule) {
              const LatentPair pair(stack_from_array(source), stack_from_array(target));
              const FrequencyMask mask =
                  make_highpass(pair.target.n_views, pair.target.height, pair.target.width, d0);
              MultiViewLatent shared =
                  eps_shared.ndim() == 3
                      ? replicate_view(image_from_array(eps_shared), pair.target.n_views)
                      : stack_from_array(eps_shared);
              DistillConfig cfg;
              cfg.beta = beta;
              cfg.gamma = gamma;
              const ScoreDelta delta =
                  csd_delta(d, pair, t, stack_from_array(eps), shared,
                            spec_from_lists(tgt_positive, tgt_negative),
                            spec_from_lists(src_positive, src_negative), cfg, schedule, mask);
              return array_from_stack(delta.value);
          },
          py::arg("denoiser"), py::arg("source"), py::arg("target"), py::arg("t"), py::arg("eps"),
          py::arg("eps_shared"), py::arg("tgt_positive"), py::arg("tgt_negative"),
          py::arg("src_positive"), py::arg("src_negative"), py::arg("beta") = 7.5,
          py::arg("gamma") = 0.9, py::arg("d0") = 0.25, py::arg("schedule"));

    // spherical harmonics
    m.def("sh_eval", [](std::array<double, 3> dir, int degree) { return sh_eval(dir, degree); },
          py::arg("direction"), py::arg("degree") = 3);

    // scene
    py::class_<PyScene>(m, "Scene")
        .def_property("sh_coeffs", &PyScene::get_sh, &PyScene::set_sh)
        .def_property_readonly("n_gaussians", [](const PyScene& s) { return s.scene.count(); })
        .def_property_readonly("n_cameras",
                               [](const PyScene& s) { return s.scene.cameras.size(); })
        .def_property_readonly("sh_degree", [](const PyScene& s) { return s.scene.sh_degree; })
        .def("render", &PyScene::render_one, py::arg("camera"))
        .def("render_all", &PyScene::render_all_views)
        .def("render_vjp", &PyScene::vjp, py::arg("camera"), py::arg("cotangent"))
        .def("save", [](const PyScene& s, const std::string& path) { save_scene(s.scene, path); });
    m.def("make_synthetic_scene", [](std::uint64_t seed, int gaussians, int cameras, int height,
                                     int width, int sh_degree) {
        auto [scene, weights] = make_synthetic_scene(seed, gaussians, cameras, height, width,
                                                     sh_degree);
        (void)weights;
        return PyScene(std::move(scene));
    }, py::arg("seed") = 7, py::arg("gaussians") = 200, py::arg("cameras") = 8,
       py::arg("height") = 64, py::arg("width") = 64, py::arg("sh_degree") = 3);
    m.def("load_scene", [](const std::string& path) { return PyScene(load_scene(path)); });

    // io
    m.def("save_stack", [](const py::array_t<double>& x, const std::string& path) {
        save_stack(stack_from_array(x), path);
    });
    m.def("load_stack", [](const std::string& path) { return array_from_stack(load_stack(path)); });
    m.def("export_png_views", [](const py::array_t<double>& x, const std::string& prefix) {
        export_png_views(stack_from_array(x), prefix);
    });

    // full loop
    m.def("stylize", &run_stylize, py::arg("scene"), py::arg("config_json"));
    m.def("default_config_json", [] { return default_config_json().dump(2); });
}
