#pragma once

#include <vector>

#include "cylrev/voxel_field.hpp"

namespace cylrev {

struct ExtractReport {
    std::vector<int> dropped_instances;  // ids with fewer than min_points
    int kept_points = 0;
};

// Grid points with sigma/alpha above tau, labeled by semantic argmax.
// Points whose instance or class argmax is background are skipped; instances
// with fewer than min_points survivors are dropped and reported.
LabeledPointCloud extract_points(const VoxelField& field, double tau, int grid_res,
                                 ExtractReport* report = nullptr, int threads = 1,
                                 int min_points = 20);

}  // namespace cylrev
