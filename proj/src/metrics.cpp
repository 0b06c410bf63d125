#include "cylrev/metrics.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <set>

#include "cylrev/hungarian.hpp"
#include "cylrev/nn_index.hpp"
#include "cylrev/rng.hpp"
#include "cylrev/sample.hpp"

namespace cylrev {

using nlohmann::json;

namespace {

// Surface samples of one cylinder in isolation (no CSG clipping): instances
// are compared by their own geometry regardless of how booleans carved them.
std::vector<Vec3> cylinder_samples(const ExtrusionCylinder& cyl, int n, uint64_t seed) {
    CadModel solo;
    solo.cylinders.push_back(cyl);
    solo.cylinders[0].op = BoolOp::Union;
    LabeledPointCloud cloud = sample_surface(solo, n, seed);
    return cloud.points;
}

// Unsigned distance to the predicted extrusion surface via the
// max(sketch-sdf, axial-slab) implicit.
double extrusion_distance(const ExtrusionCylinder& cyl, const Vec3& x) {
    Vec2 uv;
    double w;
    cyl.to_local(x, uv, w);
    double d2 = cyl.sketch.sdf(uv) * cyl.scale;
    double dz = std::abs(w) - 0.5 * cyl.height;
    return std::abs(std::max(d2, dz));
}

}  // namespace

InstanceMatching match_instances(const CadModel& gt, const std::vector<ExtrusionEstimate>& pred,
                                 int n_samples, uint64_t seed, int threads) {
    if (gt.cylinders.empty() || pred.empty())
        throw std::invalid_argument("match_instances needs nonempty models");

    std::vector<std::vector<Vec3>> gt_samples(gt.cylinders.size());
    std::vector<std::vector<Vec3>> pred_samples(pred.size());
    for (size_t i = 0; i < gt.cylinders.size(); ++i)
        gt_samples[i] = cylinder_samples(gt.cylinders[i], n_samples, hash_combine(seed, i));
    for (size_t j = 0; j < pred.size(); ++j)
        pred_samples[j] =
            cylinder_samples(pred[j].to_cylinder(), n_samples, hash_combine(seed, 100 + j));

    std::vector<std::vector<double>> cost(gt.cylinders.size(),
                                          std::vector<double>(pred.size(), 0.0));
    for (size_t i = 0; i < gt.cylinders.size(); ++i)
        for (size_t j = 0; j < pred.size(); ++j)
            cost[i][j] = chamfer(gt_samples[i], pred_samples[j], true, threads);

    InstanceMatching out;
    out.match = hungarian_assign(cost);
    out.pair_cost.assign(gt.cylinders.size(), std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < out.match.size(); ++i) {
        if (out.match[i] >= 0) {
            out.pair_cost[i] = cost[i][out.match[i]];
            ++out.matched;
        } else {
            ++out.missed;
        }
    }
    return out;
}

ParamErrors param_errors(const CadModel& gt, const std::vector<ExtrusionEstimate>& pred,
                         const InstanceMatching& matching) {
    ParamErrors out;
    int n = 0;
    for (size_t i = 0; i < matching.match.size(); ++i) {
        int j = matching.match[i];
        if (j < 0) continue;
        const auto& g = gt.cylinders[i];
        const auto& p = pred[j];
        double c = clampd(std::abs(g.axis.dot(p.axis)), 0.0, 1.0);
        out.ea_deg += rad2deg(std::acos(c));
        out.ec += (g.center - p.center).norm();
        out.eh += std::abs(g.height - p.height);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("param_errors needs at least one match");
    out.ea_deg /= n;
    out.ec /= n;
    out.eh /= n;
    return out;
}

FittingLosses fitting_losses(const CadModel& gt, const std::vector<ExtrusionEstimate>& pred,
                             const InstanceMatching& matching, int n_samples, uint64_t seed,
                             int threads) {
    (void)threads;
    FittingLosses out;
    std::vector<ExtrusionCylinder> pred_cyls;
    pred_cyls.reserve(pred.size());
    for (const auto& e : pred) pred_cyls.push_back(e.to_cylinder());

    // Fit Cyl.: GT instance samples against the matched predicted implicit.
    int n_pairs = 0;
    for (size_t i = 0; i < matching.match.size(); ++i) {
        int j = matching.match[i];
        if (j < 0) continue;
        auto samples = cylinder_samples(gt.cylinders[i], n_samples, hash_combine(seed, 7 + i));
        double mean = 0;
        for (const auto& x : samples) mean += extrusion_distance(pred_cyls[j], x);
        out.fit_cyl += mean / samples.size();
        ++n_pairs;
    }
    if (n_pairs == 0) throw std::invalid_argument("fitting_losses needs at least one match");
    out.fit_cyl /= n_pairs;

    // Fit Glob.: whole-model GT samples against the nearest predicted surface.
    LabeledPointCloud whole = sample_surface(gt, n_samples, hash_combine(seed, 99));
    double mean = 0;
    for (const auto& x : whole.points) {
        double best = std::numeric_limits<double>::max();
        for (const auto& c : pred_cyls) best = std::min(best, extrusion_distance(c, x));
        mean += best;
    }
    out.fit_glob = mean / whole.points.size();
    return out;
}

ConsistencyReport consistency_report(const LabeledPointCloud& surface_cloud,
                                     const LabeledPointCloud& curve_cloud, int threads) {
    ConsistencyReport out;
    std::set<int> surf_ids(surface_cloud.instance.begin(), surface_cloud.instance.end());
    std::set<int> curve_ids(curve_cloud.instance.begin(), curve_cloud.instance.end());
    out.counts_equal = surf_ids.size() == curve_ids.size();
    if (!curve_cloud.points.empty() && !surface_cloud.points.empty())
        out.one_way_chamfer =
            one_way_chamfer(curve_cloud.points, surface_cloud.points, true, threads);
    return out;
}

json MetricsReport::to_json() const {
    return {{"ea_deg", ea_deg},
            {"ec", ec},
            {"eh", eh},
            {"fit_cyl", fit_cyl},
            {"fit_glob", fit_glob},
            {"chamfer", chamfer},
            {"n_gt", n_gt},
            {"n_pred", n_pred},
            {"matched", matched},
            {"missed", missed},
            {"counts_equal", counts_equal},
            {"curve_to_surface_chamfer", curve_to_surface_chamfer}};
}

MetricsReport MetricsReport::from_json(const json& j) {
    MetricsReport r;
    r.ea_deg = j.at("ea_deg").get<double>();
    r.ec = j.at("ec").get<double>();
    r.eh = j.at("eh").get<double>();
    r.fit_cyl = j.at("fit_cyl").get<double>();
    r.fit_glob = j.at("fit_glob").get<double>();
    r.chamfer = j.at("chamfer").get<double>();
    r.n_gt = j.at("n_gt").get<int>();
    r.n_pred = j.at("n_pred").get<int>();
    r.matched = j.at("matched").get<int>();
    r.missed = j.at("missed").get<int>();
    r.counts_equal = j.at("counts_equal").get<bool>();
    r.curve_to_surface_chamfer = j.at("curve_to_surface_chamfer").get<double>();
    return r;
}

std::string MetricsReport::csv_header() {
    return "model,n_gt,n_pred,matched,missed,ea_deg,ec,eh,fit_cyl,fit_glob,chamfer,"
           "counts_equal,curve_to_surface_chamfer";
}

std::string MetricsReport::csv_row(const std::string& model_id) const {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g",
                  model_id.c_str(), n_gt, n_pred, matched, missed, ea_deg, ec, eh, fit_cyl,
                  fit_glob, chamfer, counts_equal ? 1 : 0, curve_to_surface_chamfer);
    return buf;
}

AggregateRow aggregate(const std::vector<MetricsReport>& reports) {
    AggregateRow row;
    for (const auto& r : reports) {
        row.ea += r.ea_deg;
        row.ec += r.ec;
        row.eh += r.eh;
        row.fit_cyl += r.fit_cyl;
        row.fit_glob += r.fit_glob;
        row.chamfer += r.chamfer;
        ++row.models;
    }
    if (row.models > 0) {
        row.ea /= row.models;
        row.ec /= row.models;
        row.eh /= row.models;
        row.fit_cyl /= row.models;
        row.fit_glob /= row.models;
        row.chamfer /= row.models;
    }
    return row;
}

std::string format_table(const AggregateRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "models  E.A.(deg)  E.C.     E.H.     Fit Cyl.  Fit Glob.\n"
                  "%-7d %-10.4f %-8.4f %-8.4f %-9.4f %-9.4f",
                  row.models, row.ea, row.ec, row.eh, row.fit_cyl, row.fit_glob);
    return buf;
}

}  // namespace cylrev
