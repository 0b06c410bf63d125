#pragma once

#include <cstdint>

#include "cylrev/model.hpp"

namespace cylrev {

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeneratorConfig {
    double axis_canonical_prob = 0.7;
    double difference_prob = 0.25;  // never applied to the first cylinder
    double min_height = 0.25, max_height = 1.1;    // pre-normalization
    double min_scale = 0.25, max_scale = 0.7;
    double center_range = 0.45;
    double fit_margin = 0.92;            // of the [-1,1]^3 cube
    double min_instance_frac = 0.015;    // visible-surface share per instance
    int max_attempts = 100;
};

// k cylinders with sketches drawn from {circle, rectangle, regular n-gon,
// rounded rectangle, convex Bezier loop, loop-with-hole}; normalized to
// [-1,1]^3, validated non-empty with every instance visible. Deterministic
// per seed.
CadModel generate_random_model(uint64_t seed, int k, const GeneratorConfig& cfg = {});

}  // namespace cylrev
