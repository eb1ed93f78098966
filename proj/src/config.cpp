#include "splatstyle/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace splatstyle {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object())
        throw std::invalid_argument("config: '" + where + "' must be an object");
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key()))
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in '" + where +
                                        "'");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config: bad value for '" + key + "'");
    }
}

std::string fingerprint_from_names(std::vector<std::string> names) {
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::string fp;
    for (const auto& n : names) {
        if (!fp.empty()) fp += "+";
        fp += n;
    }
    return fp;
}

MeanField parse_mean_value(const json& value, const std::string& where) {
    if (value.is_number()) return MeanField::make_scalar(value.get<double>());
    if (value.is_array()) {
        std::vector<double> v;
        for (const auto& x : value) {
            if (!x.is_number())
                throw std::invalid_argument("config: non-numeric entry in '" + where + "'");
            v.push_back(x.get<double>());
        }
        if (v.empty()) throw std::invalid_argument("config: empty vector in '" + where + "'");
        return MeanField::make_per_channel(std::move(v));
    }
    throw std::invalid_argument("config: '" + where + "' must be a number or an array");
}

std::map<std::string, MeanField> parse_mean_table(const json& entries, const std::string& where) {
    if (!entries.is_array())
        throw std::invalid_argument("config: '" + where + "' must be an array");
    std::map<std::string, MeanField> out;
    for (const auto& entry : entries) {
        check_keys(entry, {"tokens", "value"}, where + "[]");
        if (!entry.contains("tokens") || !entry.contains("value"))
            throw std::invalid_argument("config: '" + where + "' entries need 'tokens' and 'value'");
        const auto names = entry.at("tokens").get<std::vector<std::string>>();
        if (names.empty())
            throw std::invalid_argument("config: '" + where + "' entry with empty token list");
        const std::string fp = fingerprint_from_names(names);
        if (out.count(fp))
            throw std::invalid_argument("config: duplicate '" + where + "' entry for '" + fp + "'");
        out.emplace(fp, parse_mean_value(entry.at("value"), where + ".value"));
    }
    return out;
}

std::vector<ConditioningToken> resolve_tokens(const std::vector<std::string>& names,
                                              const std::map<std::string, ConditioningToken>& table,
                                              const std::string& where) {
    if (names.empty()) throw std::invalid_argument("config: empty token list in '" + where + "'");
    std::vector<ConditioningToken> out;
    for (const auto& n : names) {
        auto it = table.find(n);
        if (it == table.end())
            throw std::invalid_argument("config: '" + where + "' references undeclared token '" + n +
                                        "'");
        out.push_back(it->second);
    }
    return out;
}

} // namespace

nlohmann::json default_config_json() {
    json cfg;
    cfg["seed"] = 7;
    cfg["run"] = {{"iterations", 300},
                  {"views_per_step", 4},
                  {"learning_rate", 0.01},
                  {"optimizer", "adaptive_moments"},
                  {"snapshot_every", 0},
                  {"mvfc_backward", "identity"},
                  {"freeze_high_degrees", false}};
    cfg["distill"] = {{"beta", 7.5},
                      {"omega", "constant_one"},
                      {"gamma", 0.9},
                      {"cutoff_d0", 0.25}};
    cfg["schedule"] = {{"total_steps", 1000}, {"beta_start", 1e-4}, {"beta_end", 0.02},
                       {"num_timesteps", 10}, {"t_min", 20},        {"t_max", 980}};
    cfg["conditioning"] = {
        {"tokens",
         json::array({{{"name", "prompt"}, {"role", "text_prompt"}, {"values", {1.0, 0.0, 0.0, 0.0}}},
                      {{"name", "null"}, {"role", "null"}, {"values", {0.0, 0.0, 0.0, 0.0}}},
                      {{"name", "style_ref"}, {"role", "style"}, {"values", {0.0, 1.0, 0.0, 0.0}}},
                      {{"name", "content_ref"}, {"role", "content"}, {"values", {0.0, 0.0, 1.0, 0.0}}}})},
        {"target", {{"positive", {"prompt", "style_ref"}}, {"negative", {"content_ref"}}}},
        {"source", {{"positive", {"prompt"}}, {"negative", {"null"}}}}};
    cfg["denoiser"] = {
        {"kind", "gaussian_toy"},
        {"means", json::array({{{"tokens", {"prompt", "style_ref"}}, {"value", {0.8, 0.35, 0.25}}},
                               {{"tokens", {"content_ref"}}, {"value", {0.5, 0.5, 0.5}}},
                               {{"tokens", {"prompt"}}, {"value", {0.5, 0.5, 0.5}}},
                               {{"tokens", {"null"}}, {"value", {0.5, 0.5, 0.5}}}})}};
    cfg["paths"] = {{"scene", "scene.fsz"},
                    {"output_scene", "styled.fsz"},
                    {"report", "report.jsonl"},
                    {"summary", "summary.json"},
                    {"renders_prefix", "render"}};
    return cfg;
}

StylizeSetup parse_config_json(const nlohmann::json& config) {
    check_keys(config, {"seed", "run", "distill", "schedule", "conditioning", "denoiser", "paths"},
               "config");
    StylizeSetup setup;
    setup.run.seed = get_or<std::uint64_t>(config, "seed", 0);

    if (config.contains("run")) {
        const json& run = config.at("run");
        check_keys(run,
                   {"iterations", "views_per_step", "learning_rate", "optimizer", "snapshot_every",
                    "mvfc_backward", "freeze_high_degrees"},
                   "run");
        setup.run.iterations = get_or(run, "iterations", setup.run.iterations);
        setup.run.views_per_step = get_or(run, "views_per_step", setup.run.views_per_step);
        setup.run.learning_rate = get_or(run, "learning_rate", setup.run.learning_rate);
        const std::string opt = get_or<std::string>(run, "optimizer", "adaptive_moments");
        if (opt == "plain_descent") setup.run.optimizer = OptimizerKind::plain_descent;
        else if (opt == "adaptive_moments") setup.run.optimizer = OptimizerKind::adaptive_moments;
        else throw std::invalid_argument("config: unknown optimizer '" + opt + "'");
        setup.run.snapshot_every = get_or(run, "snapshot_every", setup.run.snapshot_every);
        const std::string back = get_or<std::string>(run, "mvfc_backward", "identity");
        if (back == "identity") setup.run.mvfc_backward = MvfcBackward::identity;
        else if (back == "filtered") setup.run.mvfc_backward = MvfcBackward::filtered;
        else throw std::invalid_argument("config: unknown mvfc_backward '" + back + "'");
        setup.run.freeze_high_degrees =
            get_or(run, "freeze_high_degrees", setup.run.freeze_high_degrees);
    }

    if (config.contains("distill")) {
        const json& d = config.at("distill");
        check_keys(d, {"beta", "omega", "gamma", "cutoff_d0"}, "distill");
        setup.run.distill.beta = get_or(d, "beta", setup.run.distill.beta);
        const std::string omega = get_or<std::string>(d, "omega", "constant_one");
        if (omega == "constant_one") setup.run.distill.omega = OmegaKind::constant_one;
        else if (omega == "one_minus_alpha_bar")
            setup.run.distill.omega = OmegaKind::one_minus_alpha_bar;
        else throw std::invalid_argument("config: unknown omega '" + omega + "'");
        setup.run.distill.gamma = get_or(d, "gamma", setup.run.distill.gamma);
        setup.run.cutoff_d0 = get_or(d, "cutoff_d0", setup.run.cutoff_d0);
    }

    if (config.contains("schedule")) {
        const json& s = config.at("schedule");
        check_keys(s, {"total_steps", "beta_start", "beta_end", "num_timesteps", "t_min", "t_max"},
                   "schedule");
        setup.run.schedule.total_steps = get_or(s, "total_steps", setup.run.schedule.total_steps);
        setup.run.schedule.beta_start = get_or(s, "beta_start", setup.run.schedule.beta_start);
        setup.run.schedule.beta_end = get_or(s, "beta_end", setup.run.schedule.beta_end);
        setup.run.schedule.num_timesteps =
            get_or(s, "num_timesteps", setup.run.schedule.num_timesteps);
        setup.run.schedule.t_min = get_or(s, "t_min", setup.run.schedule.t_min);
        setup.run.schedule.t_max = get_or(s, "t_max", setup.run.schedule.t_max);
    }

    const json cond = config.contains("conditioning") ? config.at("conditioning")
                                                      : default_config_json().at("conditioning");
    check_keys(cond, {"tokens", "target", "source"}, "conditioning");
    std::map<std::string, ConditioningToken> token_table;
    for (const auto& jt : cond.at("tokens")) {
        check_keys(jt, {"name", "role", "values", "value"}, "conditioning.tokens[]");
        ConditioningToken tok;
        tok.name = jt.at("name").get<std::string>();
        tok.role = token_role_from_name(jt.at("role").get<std::string>());
        if (jt.contains("values")) tok.values = jt.at("values").get<std::vector<double>>();
        else if (jt.contains("value")) tok.values = {jt.at("value").get<double>()};
        else throw std::invalid_argument("config: token '" + tok.name + "' needs values");
        if (token_table.count(tok.name))
            throw std::invalid_argument("config: duplicate token name '" + tok.name + "'");
        token_table.emplace(tok.name, tok);
    }
    auto parse_spec = [&](const json& j, const std::string& where) {
        check_keys(j, {"positive", "negative"}, where);
        ConditioningSpec spec;
        spec.positive = resolve_tokens(j.at("positive").get<std::vector<std::string>>(), token_table,
                                       where + ".positive");
        spec.negative = resolve_tokens(j.at("negative").get<std::vector<std::string>>(), token_table,
                                       where + ".negative");
        spec.validate();
        return spec;
    };
    setup.cond_tgt = parse_spec(cond.at("target"), "conditioning.target");
    setup.cond_src = parse_spec(cond.at("source"), "conditioning.source");

    const json den = config.contains("denoiser") ? config.at("denoiser")
                                                 : default_config_json().at("denoiser");
    const std::string kind = get_or<std::string>(den, "kind", "gaussian_toy");
    if (kind == "gaussian_toy") {
        check_keys(den, {"kind", "means"}, "denoiser");
        if (!den.contains("means"))
            throw std::invalid_argument("config: gaussian_toy denoiser needs 'means'");
        setup.denoiser = std::make_shared<GaussianToyDenoiser>(
            build_schedule(setup.run.schedule), parse_mean_table(den.at("means"), "denoiser.means"));
    } else if (kind == "frozen_linear") {
        check_keys(den, {"kind", "mix_seed", "mix_scale", "biases"}, "denoiser");
        if (!den.contains("biases"))
            throw std::invalid_argument("config: frozen_linear denoiser needs 'biases'");
        setup.denoiser = std::make_shared<FrozenLinearDenoiser>(
            3, get_or<std::uint64_t>(den, "mix_seed", 1234),
            get_or<double>(den, "mix_scale", 0.5),
            parse_mean_table(den.at("biases"), "denoiser.biases"));
    } else {
        throw std::invalid_argument("config: unknown denoiser kind '" + kind + "'");
    }

    if (config.contains("paths")) {
        const json& p = config.at("paths");
        check_keys(p, {"scene", "output_scene", "report", "summary", "renders_prefix"}, "paths");
        setup.paths.scene = get_or(p, "scene", setup.paths.scene);
        setup.paths.output_scene = get_or(p, "output_scene", setup.paths.output_scene);
        setup.paths.report = get_or(p, "report", setup.paths.report);
        setup.paths.summary = get_or(p, "summary", setup.paths.summary);
        setup.paths.renders_prefix = get_or(p, "renders_prefix", setup.paths.renders_prefix);
    }
    return setup;
}

StylizeSetup load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    json cfg = json::parse(in, nullptr, false);
    if (cfg.is_discarded()) throw std::invalid_argument("config: " + path + " is not valid JSON");
    return parse_config_json(cfg);
}

} // namespace splatstyle
