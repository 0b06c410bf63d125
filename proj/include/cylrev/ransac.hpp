#pragma once

#include <cstdint>
#include <vector>

#include "cylrev/geom.hpp"

namespace cylrev {

struct PlaneFit {
    Vec3 normal{0, 0, 1};  // unit, sign canonicalized toward +largest component
    double offset = 0.0;   // plane: dot(normal, x) = offset
    std::vector<bool> inliers;
    int inlier_count = 0;
};

struct RansacError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Best 3-point-hypothesis plane by inlier count, least-squares refined over
// the inliers (smallest eigenvector of the covariance). Deterministic per seed.
PlaneFit ransac_plane(const std::vector<Vec3>& points, int iters, double tol, uint64_t seed);

}  // namespace cylrev
