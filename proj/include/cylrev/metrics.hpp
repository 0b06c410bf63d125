#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cylrev/model.hpp"
#include "cylrev/pointcloud.hpp"
#include "cylrev/reveng.hpp"

namespace cylrev {

struct MetricsReport {
    double ea_deg = 0.0;      // extrusion-axis error, degrees, sign-folded
    double ec = 0.0;          // extrusion-center error
    double eh = 0.0;          // extrusion-height L1 error
    double fit_cyl = 0.0;     // per-instance fitting loss
    double fit_glob = 0.0;    // global fitting loss
    double chamfer = 0.0;     // whole-model symmetric chamfer (squared)
    int n_gt = 0, n_pred = 0, matched = 0, missed = 0;
    bool counts_equal = false;           // curve vs surface instance counts
    double curve_to_surface_chamfer = 0.0;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
    std::string csv_row(const std::string& model_id) const;
    static std::string csv_header();
};

// One-to-one partial matching between GT cylinders and estimates by symmetric
// chamfer between their surface samples. match[gt_index] = estimate index or -1.
struct InstanceMatching {
    std::vector<int> match;
    std::vector<double> pair_cost;  // chamfer of each matched pair, else inf
    int matched = 0, missed = 0;
};

InstanceMatching match_instances(const CadModel& gt,
                                 const std::vector<ExtrusionEstimate>& pred, int n_samples = 1024,
                                 uint64_t seed = 0, int threads = 1);

struct ParamErrors {
    double ea_deg = 0, ec = 0, eh = 0;
};

ParamErrors param_errors(const CadModel& gt, const std::vector<ExtrusionEstimate>& pred,
                         const InstanceMatching& matching);

struct FittingLosses {
    double fit_cyl = 0, fit_glob = 0;
};

// Unsigned distances from GT surface samples to the predicted extrusion
// implicits, max(axial-slab, scaled-sketch-sdf) convention.
FittingLosses fitting_losses(const CadModel& gt, const std::vector<ExtrusionEstimate>& pred,
                             const InstanceMatching& matching, int n_samples = 4096,
                             uint64_t seed = 0, int threads = 1);

struct ConsistencyReport {
    bool counts_equal = false;
    double one_way_chamfer = 0.0;  // curve -> surface, squared
};

ConsistencyReport consistency_report(const LabeledPointCloud& surface_cloud,
                                     const LabeledPointCloud& curve_cloud, int threads = 1);

struct AggregateRow {
    double ea = 0, ec = 0, eh = 0, fit_cyl = 0, fit_glob = 0, chamfer = 0;
    int models = 0;
};

AggregateRow aggregate(const std::vector<MetricsReport>& reports);
std::string format_table(const AggregateRow& row);  // Table-1 column order

}  // namespace cylrev
