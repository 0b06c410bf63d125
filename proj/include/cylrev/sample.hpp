#pragma once

#include <cstdint>

#include "cylrev/model.hpp"
#include "cylrev/pointcloud.hpp"

namespace cylrev {

struct SamplingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Area-weighted uniform samples on the CSG boundary, labeled with owning
// instance (1-based) and start/end/barrel class. Deterministic per seed.
LabeledPointCloud sample_surface(const CadModel& model, int n_points, uint64_t seed);

}  // namespace cylrev
