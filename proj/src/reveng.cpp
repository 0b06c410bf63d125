#include "cylrev/reveng.hpp"

#include <algorithm>
#include <map>

#include "cylrev/extract.hpp"
#include "cylrev/hungarian.hpp"
#include "cylrev/mec.hpp"
#include "cylrev/ransac.hpp"
#include "cylrev/render.hpp"
#include "cylrev/rng.hpp"

namespace cylrev {

namespace {

Vec3 centroid(const std::vector<Vec3>& pts) {
    Vec3 c{0, 0, 0};
    for (const auto& p : pts) c += p;
    return pts.empty() ? c : c / double(pts.size());
}

std::vector<Vec2> subsample(const std::vector<Vec2>& pts, size_t cap, uint64_t seed) {
    if (pts.size() <= cap) return pts;
    std::vector<size_t> idx(pts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed, 0x5ab);
    for (size_t i = idx.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.next_u64() % (i + 1)]);
    std::vector<Vec2> out(cap);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    for (size_t i = 0; i < cap; ++i) out[i] = pts[idx[i]];
    return out;
}

}  // namespace

ExtrusionCylinder ExtrusionEstimate::to_cylinder(BoolOp op) const {
    ExtrusionCylinder c;
    c.axis = axis;
    c.height = std::max(height, 1e-3);
    c.scale = std::max(scale, 1e-6);
    c.center = center;
    c.op = op;
    c.sketch = SketchProfile(loops, false);
    return c;
}

AxisEstimate estimate_axis(const std::vector<Vec3>& surface_base_points,
                           const std::vector<Vec3>& curve_points, const RevengConfig& cfg,
                           uint64_t salt) {
    AxisEstimate out;
    const bool surface_ok = static_cast<int>(surface_base_points.size()) >= cfg.min_base_points;
    const std::vector<Vec3>* pts = surface_ok ? &surface_base_points : &curve_points;
    out.curve_fallback = !surface_ok;
    if (pts->size() < 3)
        throw RevengError("instance has too few points for axis estimation");
    PlaneFit fit = ransac_plane(*pts, cfg.ransac_iters, cfg.ransac_tol,
                                hash_combine(cfg.seed, hash_combine(0xa215, salt)));
    out.axis = fit.normal;
    return out;
}

Projected2D project_and_normalize(const std::vector<Vec3>& points, const Vec3& axis) {
    if (points.size() < 3) throw RevengError("projection needs at least 3 points");
    Mat3 frame = rotation_z_to(axis);
    Vec3 u = frame.col(0), v = frame.col(1);
    Projected2D out;
    out.points.reserve(points.size());
    Vec2 mean{0, 0};
    for (const auto& p : points) {
        Vec2 q{p.dot(u), p.dot(v)};
        out.points.push_back(q);
        mean += q;
    }
    mean = mean / double(points.size());
    out.center2d = mean;
    Circle2 mec = minimal_enclosing_circle(out.points);
    out.scale = mec.radius;
    if (out.scale < 1e-6) throw RevengError("projected points are degenerate (zero scale)");
    for (auto& q : out.points) q = (q - mean) / out.scale;
    return out;
}

HeightCenter estimate_height_center(const std::vector<Vec3>& curve_start,
                                    const std::vector<Vec3>& curve_end,
                                    const std::vector<Vec3>& surface_barrel, const Vec3& axis,
                                    const RevengConfig& cfg) {
    HeightCenter out;
    const bool curves_ok = static_cast<int>(curve_start.size()) >= cfg.min_curve_points &&
                           static_cast<int>(curve_end.size()) >= cfg.min_curve_points;
    if (curves_ok) {
        Vec3 cs = centroid(curve_start), ce = centroid(curve_end);
        out.height = std::abs((ce - cs).dot(axis));
        std::vector<Vec3> all = curve_start;
        all.insert(all.end(), curve_end.begin(), curve_end.end());
        out.center = centroid(all);
        out.barrel_fallback = false;
        return out;
    }
    if (surface_barrel.size() < 8)
        throw RevengError("instance has neither base curves nor barrel points");
    Vec3 mean = centroid(surface_barrel);
    std::vector<double> axial(surface_barrel.size());
    for (size_t i = 0; i < surface_barrel.size(); ++i)
        axial[i] = (surface_barrel[i] - mean).dot(axis);
    std::sort(axial.begin(), axial.end());
    auto pct = [&](double q) {
        double pos = q * (axial.size() - 1);
        size_t lo = static_cast<size_t>(pos);
        size_t hi = std::min(lo + 1, axial.size() - 1);
        double f = pos - lo;
        return axial[lo] * (1 - f) + axial[hi] * f;
    };
    out.height = pct(0.98) - pct(0.02);
    out.center = mean;
    out.barrel_fallback = true;
    return out;
}

namespace {

struct InstanceBuckets {
    std::vector<Vec3> base;    // surface start+end
    std::vector<Vec3> barrel;  // surface barrel
    std::vector<Vec3> curve_start, curve_end, curve_all;
    int surface_id = -1, curve_id = -1;
};

std::map<int, std::vector<size_t>> split_by_instance(const LabeledPointCloud& cloud) {
    std::map<int, std::vector<size_t>> out;
    for (size_t i = 0; i < cloud.size(); ++i) out[cloud.instance[i]].push_back(i);
    return out;
}

}  // namespace

ReconstructionResult reconstruct_from_clouds(const LabeledPointCloud& surface_cloud,
                                             const LabeledPointCloud& curve_cloud,
                                             const RevengConfig& cfg) {
    auto surf_by_id = split_by_instance(surface_cloud);
    auto curve_by_id = split_by_instance(curve_cloud);

    // Match surface and curve instances by centroid distance.
    std::vector<int> surf_ids, curve_ids;
    std::vector<Vec3> surf_cent, curve_cent;
    for (const auto& [id, idxs] : surf_by_id) {
        surf_ids.push_back(id);
        Vec3 c{0, 0, 0};
        for (size_t i : idxs) c += surface_cloud.points[i];
        surf_cent.push_back(c / double(idxs.size()));
    }
    for (const auto& [id, idxs] : curve_by_id) {
        curve_ids.push_back(id);
        Vec3 c{0, 0, 0};
        for (size_t i : idxs) c += curve_cloud.points[i];
        curve_cent.push_back(c / double(idxs.size()));
    }

    std::vector<int> surf_to_curve(surf_ids.size(), -1);
    std::vector<bool> curve_used(curve_ids.size(), false);
    if (!surf_ids.empty() && !curve_ids.empty()) {
        std::vector<std::vector<double>> cost(surf_ids.size(),
                                              std::vector<double>(curve_ids.size(), 0.0));
        for (size_t i = 0; i < surf_ids.size(); ++i)
            for (size_t j = 0; j < curve_ids.size(); ++j)
                cost[i][j] = (surf_cent[i] - curve_cent[j]).norm();
        auto assign = hungarian_assign(cost);
        for (size_t i = 0; i < assign.size(); ++i) {
            // Far-apart pairs are distinct instances, not a match.
            if (assign[i] >= 0 && cost[i][assign[i]] < 0.6) {
                surf_to_curve[i] = assign[i];
                curve_used[assign[i]] = true;
            }
        }
    }

    std::vector<InstanceBuckets> instances;
    for (size_t i = 0; i < surf_ids.size(); ++i) {
        InstanceBuckets b;
        b.surface_id = surf_ids[i];
        for (size_t idx : surf_by_id[surf_ids[i]]) {
            if (surface_cloud.cls[idx] == 3)
                b.barrel.push_back(surface_cloud.points[idx]);
            else
                b.base.push_back(surface_cloud.points[idx]);
        }
        if (surf_to_curve[i] >= 0) b.curve_id = curve_ids[surf_to_curve[i]];
        instances.push_back(std::move(b));
    }
    for (size_t j = 0; j < curve_ids.size(); ++j) {
        if (curve_used[j]) continue;
        InstanceBuckets b;
        b.curve_id = curve_ids[j];
        instances.push_back(std::move(b));
    }
    for (auto& b : instances) {
        if (b.curve_id < 0) continue;
        for (size_t idx : curve_by_id[b.curve_id]) {
            const Vec3& p = curve_cloud.points[idx];
            b.curve_all.push_back(p);
            if (curve_cloud.cls[idx] == 1)
                b.curve_start.push_back(p);
            else
                b.curve_end.push_back(p);
        }
    }

    ReconstructionResult result;
    for (const auto& b : instances) {
        try {
            ExtrusionEstimate est;
            est.surface_instance = b.surface_id;
            est.curve_instance = b.curve_id;

            uint64_t salt = uint64_t(std::max(b.surface_id, 0)) * 97 +
                            uint64_t(std::max(b.curve_id, 0));
            AxisEstimate ax = estimate_axis(b.base, b.curve_all, cfg, salt);
            est.axis = ax.axis;
            est.provenance.axis_from = ax.curve_fallback ? "curve_fallback" : "surface";

            // Sketch boundary samples: merged base-curve points; barrel points
            // (which project onto the sketch outline) stand in when the curve
            // field missed the instance.
            const std::vector<Vec3>& sketch_src =
                b.curve_all.size() >= 8 ? b.curve_all : b.barrel;
            if (sketch_src.size() < 8) throw RevengError("too few sketch boundary samples");
            Projected2D proj = project_and_normalize(sketch_src, est.axis);
            est.scale = proj.scale;

            std::vector<Vec2> fit_pts =
                subsample(proj.points, cfg.max_fit_points, hash_combine(cfg.seed, salt));
            auto oriented = estimate_normals_2d(fit_pts);
            est.sketch_grid = fit_implicit_sketch(oriented, cfg.sketch_grid_res, cfg.threads);
            SketchLoops loops = extract_sketch_loops(est.sketch_grid);

            HeightCenter hc =
                estimate_height_center(b.curve_start, b.curve_end, b.barrel, est.axis, cfg);
            est.provenance.hc_from = hc.barrel_fallback ? "barrel_fallback" : "curve";
            est.height = hc.height;

            // Anchor: in-plane position comes from the sketch frame, axial
            // position from the height/center estimator.
            Mat3 frame = rotation_z_to(est.axis);
            Vec3 u = frame.col(0), v = frame.col(1);
            est.center = u * proj.center2d.x + v * proj.center2d.y +
                         est.axis * hc.center.dot(est.axis);

            // Enforce the unit-disk convention on the fitted loops.
            double max_r = 0;
            for (const auto& poly : loops.polylines)
                for (const auto& p : poly) max_r = std::max(max_r, p.norm());
            double renorm = std::max(1.0, max_r);
            if (renorm > 1.0) {
                for (auto& poly : loops.polylines)
                    for (auto& p : poly) p = p / renorm;
                for (auto& loop : loops.splines)
                    for (auto& seg : loop.segments) {
                        auto& bz = std::get<BezierSeg>(seg);
                        bz.p0 = bz.p0 / renorm;
                        bz.p1 = bz.p1 / renorm;
                        bz.p2 = bz.p2 / renorm;
                        bz.p3 = bz.p3 / renorm;
                    }
                est.scale *= renorm;
            }
            est.polylines = std::move(loops.polylines);
            est.loops = std::move(loops.splines);

            result.estimates.push_back(std::move(est));
        } catch (const std::runtime_error&) {
            result.missed_instances.push_back(
                b.surface_id >= 0 ? b.surface_id : b.curve_id);
        }
    }
    if (result.estimates.empty())
        throw RevengError("no instance could be reconstructed from the clouds");
    return result;
}

ReconstructionResult reconstruct_model(const FieldPair& fields, const RevengConfig& cfg) {
    LabeledPointCloud surf =
        extract_points(fields.surface, cfg.extract_tau, cfg.extract_grid, nullptr, cfg.threads);
    LabeledPointCloud curve =
        extract_points(fields.curve, cfg.extract_tau, cfg.extract_grid, nullptr, cfg.threads);
    return reconstruct_from_clouds(surf, curve, cfg);
}

BinaryOpSearchResult search_binary_ops(const std::vector<ExtrusionEstimate>& estimates,
                                       const std::vector<LabelImage>& observed_silhouettes,
                                       const std::vector<Camera>& cameras, int threads) {
    const int k = static_cast<int>(estimates.size());
    if (k < 1 || k > kMaxInstances) throw RevengError("binary-op search needs 1..8 estimates");
    if (observed_silhouettes.size() != cameras.size() || cameras.empty())
        throw RevengError("binary-op search needs matching silhouettes and cameras");

    BinaryOpSearchResult out;
    const int n_candidates = 1 << (k - 1);
    out.candidates_evaluated = n_candidates;
    double best_score = std::numeric_limits<double>::max();
    int best_diffs = k + 1;

    for (int mask = 0; mask < n_candidates; ++mask) {
        CadModel candidate;
        int n_diff = 0;
        for (int i = 0; i < k; ++i) {
            bool diff = i > 0 && ((mask >> (i - 1)) & 1);
            n_diff += diff;
            candidate.cylinders.push_back(
                estimates[i].to_cylinder(diff ? BoolOp::Difference : BoolOp::Union));
        }
        double err_sum = 0;
        int64_t n_px = 0;
        for (size_t v = 0; v < cameras.size(); ++v) {
            LabelImage sil = render_silhouette(candidate, cameras[v], threads);
            const LabelImage& obs = observed_silhouettes[v];
            for (size_t i = 0; i < sil.data.size(); ++i) {
                double d = double(sil.data[i] != 0) - double(obs.data[i] != 0);
                err_sum += d * d;
            }
            n_px += static_cast<int64_t>(sil.data.size());
        }
        double score = err_sum / double(n_px);
        if (score < best_score - 1e-12 ||
            (std::abs(score - best_score) <= 1e-12 && n_diff < best_diffs)) {
            best_score = score;
            best_diffs = n_diff;
            out.ops.assign(k, BoolOp::Union);
            for (int i = 1; i < k; ++i)
                out.ops[i] = ((mask >> (i - 1)) & 1) ? BoolOp::Difference : BoolOp::Union;
        }
    }
    out.best_score = best_score;
    return out;
}

}  // namespace cylrev
