#pragma once

#include <string>

#include "cylrev/config.hpp"
#include "cylrev/metrics.hpp"

namespace cylrev {

struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Stages: generate | render | fit | reconstruct | evaluate | pipeline | ablate.
// Artifacts land under cfg.out_dir; each stage writes a manifest recording the
// config hash and seed. Throws ConfigError / StageError.
void run_stage(const std::string& stage, const PipelineConfig& cfg);

// Individual stages, reusable programmatically.
void stage_generate(const PipelineConfig& cfg);
void stage_render(const PipelineConfig& cfg);
void stage_fit(const PipelineConfig& cfg);
void stage_reconstruct(const PipelineConfig& cfg);
MetricsReport stage_evaluate(const PipelineConfig& cfg);
MetricsReport run_full_pipeline(const PipelineConfig& cfg);
void stage_ablate(const PipelineConfig& cfg, const std::string& sweep);

}  // namespace cylrev
