#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cylrev/image.hpp"
#include "cylrev/camera.hpp"
#include "cylrev/model.hpp"
#include "cylrev/model_json.hpp"
#include "cylrev/pointcloud.hpp"
#include "cylrev/sketch_fit.hpp"
#include "cylrev/voxel_field.hpp"

namespace cylrev {

struct RevengError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RevengConfig {
    int ransac_iters = 1000;
    double ransac_tol = 0.01;
    int min_base_points = 30;   // below this, axis falls back to curve points
    int min_curve_points = 10;  // per start/end label, below this use barrel extent
    int sketch_grid_res = 128;
    int max_fit_points = 512;   // subsample cap for the implicit solve
    double extract_tau = 0.99;
    int extract_grid = 128;
    uint64_t seed = 0;
    int threads = 1;
};

struct ExtrusionEstimate {
    Vec3 axis{0, 0, 1};
    Vec3 center{0, 0, 0};
    double height = 0.0;
    double scale = 1.0;
    SketchGrid sketch_grid;
    std::vector<SketchLoop> loops;              // normalized sketch frame
    std::vector<std::vector<Vec2>> polylines;   // marching-squares output
    Provenance provenance;
    int surface_instance = -1;  // cloud ids (1-based), -1 if absent there
    int curve_instance = -1;

    // Solid for rendering/metrics. The sketch loops are anchored so the
    // reconstructed geometry is independent of which center estimator ran.
    ExtrusionCylinder to_cylinder(BoolOp op = BoolOp::Union) const;
};

struct AxisEstimate {
    Vec3 axis{0, 0, 1};
    bool curve_fallback = false;
};

// Plane fit on the instance's base-surface points; falls back to the curve
// points when the bases are too sparse (occlusion).
AxisEstimate estimate_axis(const std::vector<Vec3>& surface_base_points,
                           const std::vector<Vec3>& curve_points, const RevengConfig& cfg,
                           uint64_t salt = 0);

struct Projected2D {
    std::vector<Vec2> points;  // normalized: (p - center2d) / scale
    double scale = 1.0;        // minimal-enclosing-circle radius
    Vec2 center2d;             // centroid of the raw projections
};

// Projects along the axis into the deterministic sketch frame and normalizes
// by centroid and minimal-enclosing-circle radius.
Projected2D project_and_normalize(const std::vector<Vec3>& points, const Vec3& axis);

struct HeightCenter {
    double height = 0.0;
    Vec3 center{0, 0, 0};
    bool barrel_fallback = false;
};

// Height from the axial gap between per-label curve centroids; center from
// the mean curve point. When either base label is missing, both come from
// the barrel extent (2nd..98th percentile of the axial coordinate).
HeightCenter estimate_height_center(const std::vector<Vec3>& curve_start,
                                    const std::vector<Vec3>& curve_end,
                                    const std::vector<Vec3>& surface_barrel, const Vec3& axis,
                                    const RevengConfig& cfg);

struct ReconstructionResult {
    std::vector<ExtrusionEstimate> estimates;
    std::vector<int> missed_instances;  // surface/curve ids that failed entirely
};

ReconstructionResult reconstruct_from_clouds(const LabeledPointCloud& surface_cloud,
                                             const LabeledPointCloud& curve_cloud,
                                             const RevengConfig& cfg);

// extract_points on both fields, then per-instance parameter recovery.
ReconstructionResult reconstruct_model(const FieldPair& fields, const RevengConfig& cfg);

struct BinaryOpSearchResult {
    std::vector<BoolOp> ops;
    double best_score = 0.0;
    int candidates_evaluated = 0;
};

// Exhaustive union/difference search (first op fixed to union) scored by the
// mean per-pixel squared silhouette difference over all views.
BinaryOpSearchResult search_binary_ops(const std::vector<ExtrusionEstimate>& estimates,
                                       const std::vector<LabelImage>& observed_silhouettes,
                                       const std::vector<Camera>& cameras, int threads = 1);

}  // namespace cylrev
