#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "splatstyle/stylize.hpp"

namespace splatstyle {

struct StylizePaths {
    std::string scene = "scene.fsz";
    std::string output_scene = "styled.fsz";
    std::string report = "report.jsonl";
    std::string summary = "summary.json";
    std::string renders_prefix = "render";
};

// Everything a stylize run needs, assembled from one JSON config. Unknown
// keys are rejected so typos fail loudly.
struct StylizeSetup {
    RunConfig run;
    ConditioningSpec cond_tgt;
    ConditioningSpec cond_src;
    std::shared_ptr<Denoiser> denoiser;
    StylizePaths paths;
};

nlohmann::json default_config_json();
StylizeSetup parse_config_json(const nlohmann::json& config);
StylizeSetup load_config_file(const std::string& path);

} // namespace splatstyle
