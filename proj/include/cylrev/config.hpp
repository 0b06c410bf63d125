#pragma once

#include <string>

#include <json.hpp>

#include "cylrev/field_train.hpp"
#include "cylrev/generate.hpp"
#include "cylrev/noise.hpp"
#include "cylrev/reveng.hpp"

namespace cylrev {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PipelineConfig {
    uint64_t seed = 42;
    int threads = 0;  // 0 = all hardware threads
    std::string out_dir;
    std::string preset = "desk";  // "desk" or "paper"

    int k = 2;  // generated instance count
    GeneratorConfig generator;

    int views = 50;
    int resolution = 200;  // paper preset: 400
    double line_width = 5.0;
    double fov_deg = 40.0;
    double cam_radius = 2.8;

    NoiseSpec noise;
    TrainConfig train;
    RevengConfig recon;
    bool dump_sketch_grids = false;

    int eval_samples = 8192;
    int ablate_models = 5;

    int effective_threads() const;
    void validate() const;
    void apply_preset(const std::string& name);
};

// Strict parse: unknown keys are rejected by name; absent keys keep defaults.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);

nlohmann::json config_to_json(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);  // FNV-1a over canonical dump

}  // namespace cylrev
