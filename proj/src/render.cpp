#include "cylrev/render.hpp"

#include <omp.h>

#include <cmath>

namespace cylrev {

namespace {

constexpr double kHitEps = 1e-4;     // march step floor near surfaces
constexpr double kRefineTol = 1e-5;  // bisection width
constexpr double kDepthTol = 2e-3;   // curve-vs-surface occlusion tolerance
constexpr double kOnSurfaceTol = 1e-3;

int resolve_threads(int threads) {
    return threads > 0 ? threads : omp_get_max_threads();
}

// March [t0,t1] and return the first occupancy flip, bisection refined.
double march_segment(const PreparedModel& prep, const Ray& ray, double t0, double t1) {
    auto p0 = prep.probe(ray.at(t0));
    bool prev_inside = p0.inside;
    double prev_t = t0;
    double t = t0;
    double bound = p0.bound;
    int guard = 0;
    while (t < t1 && ++guard < 4096) {
        double step = std::max(bound * 0.95, kHitEps);
        double nt = t + step;
        auto pr = prep.probe(ray.at(nt));
        if (pr.inside != prev_inside) {
            double lo = prev_t, hi = nt;
            for (int i = 0; i < 48 && hi - lo > kRefineTol; ++i) {
                double mid = 0.5 * (lo + hi);
                if (prep.probe(ray.at(mid)).inside == prev_inside)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        prev_t = nt;
        t = nt;
        bound = pr.bound;
    }
    return std::numeric_limits<double>::infinity();
}

double march_first_hit_prepared(const PreparedModel& prep, const Ray& ray) {
    Aabb box = prep.bounds();
    // Small inflation so grazing rays still get a clean segment.
    box.lo -= Vec3{1e-3, 1e-3, 1e-3};
    box.hi += Vec3{1e-3, 1e-3, 1e-3};
    double t0, t1;
    if (!box.intersect(ray, t0, t1)) return std::numeric_limits<double>::infinity();
    return march_segment(prep, ray, t0, t1);
}

}  // namespace

double march_first_hit(const CadModel& model, const Ray& ray) {
    PreparedModel prep(model);
    return march_first_hit_prepared(prep, ray);
}

SurfaceRender render_surface_labels(const CadModel& model, const Camera& cam, int threads) {
    SurfaceRender out;
    out.instance = LabelImage(cam.height, cam.width, 0);
    out.cls = LabelImage(cam.height, cam.width, 0);
    out.depth = DepthImage(cam.height, cam.width, std::numeric_limits<float>::infinity());
    const double eps = default_class_eps();
    const PreparedModel prep(model);

#pragma omp parallel for schedule(dynamic, 8) num_threads(resolve_threads(threads))
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            Ray ray = cam.pixel_ray(row, col);
            double t = march_first_hit_prepared(prep, ray);
            if (!std::isfinite(t)) continue;
            SurfacePointInfo info = classify_surface_point(model, ray.at(t), eps);
            if (info.instance < 0) continue;
            out.instance.at(row, col) = static_cast<uint8_t>(info.instance + 1);
            out.cls.at(row, col) = static_cast<uint8_t>(info.cls);
            out.depth.at(row, col) = static_cast<float>(t);
        }
    }
    return out;
}

LabelImage render_silhouette(const CadModel& model, const Camera& cam, int threads) {
    LabelImage out(cam.height, cam.width, 0);
    const PreparedModel prep(model);
#pragma omp parallel for schedule(dynamic, 8) num_threads(resolve_threads(threads))
    for (int row = 0; row < cam.height; ++row) {
        for (int col = 0; col < cam.width; ++col) {
            Ray ray = cam.pixel_ray(row, col);
            if (std::isfinite(march_first_hit_prepared(prep, ray))) out.at(row, col) = 1;
        }
    }
    return out;
}

CurveRender render_curve_labels(const CadModel& model, const Camera& cam, double width_px,
                                int threads) {
    // The occlusion test runs against the surface depth buffer.
    SurfaceRender surf = render_surface_labels(model, cam, threads);

    CurveRender out;
    out.instance = LabelImage(cam.height, cam.width, 0);
    out.cls = LabelImage(cam.height, cam.width, 0);
    DepthImage curve_depth(cam.height, cam.width, std::numeric_limits<float>::infinity());

    const Vec3 eye = cam.center();
    const double radius = 0.5 * width_px;

    struct LoopTask {
        int cyl;
        uint8_t cls;  // 1 start, 2 end
    };
    std::vector<LoopTask> tasks;
    for (size_t i = 0; i < model.cylinders.size(); ++i) {
        tasks.push_back({static_cast<int>(i), 1});
        tasks.push_back({static_cast<int>(i), 2});
    }

    // A projected loop sample is visible when it lies on the final surface
    // and nothing in its pixel neighborhood is clearly in front of it. The
    // neighborhood max tolerates the half-pixel depth quantization of the
    // buffer on slanted surfaces.
    auto occluded = [&](double row, double col, double t_point) {
        int r = static_cast<int>(std::lround(row));
        int c = static_cast<int>(std::lround(col));
        double best = -std::numeric_limits<double>::infinity();
        for (int dr = -1; dr <= 1; ++dr)
            for (int dc = -1; dc <= 1; ++dc) {
                int rr = r + dr, cc = c + dc;
                if (!surf.depth.in_bounds(rr, cc)) return false;
                best = std::max(best, static_cast<double>(surf.depth.at(rr, cc)));
            }
        return best < t_point - kDepthTol;
    };

    // Per-task stamp lists are merged in task order afterwards so the result
    // does not depend on the parallel schedule.
    struct Stamp {
        float row, col, depth;
    };
    std::vector<std::vector<Stamp>> stamps(tasks.size());

#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(threads))
    for (size_t ti = 0; ti < tasks.size(); ++ti) {
        const auto& task = tasks[ti];
        const auto& c = model.cylinders[task.cyl];
        double w = (task.cls == 1 ? -0.5 : 0.5) * c.height;
        // Arc-length step sized to about half a pixel on screen.
        double perim = c.sketch.boundary_length() * c.scale;
        double dist = std::max((c.center - eye).norm() - 1.0, 0.3);
        double px_per_world = cam.fx / dist;
        int n = std::max(64, static_cast<int>(std::ceil(perim * px_per_world * 2.0)));
        n = std::min(n, 20000);
        for (int si = 0; si < n; ++si) {
            Vec2 p2 = c.sketch.boundary_point((si + 0.5) / n);
            Vec3 x = c.from_local(p2, w);
            if (std::abs(model_pseudo_sdf(model, x)) > kOnSurfaceTol) continue;
            double row, col, depth;
            if (!cam.project(x, row, col, depth)) continue;
            if (row < -radius || row >= cam.height + radius || col < -radius ||
                col >= cam.width + radius)
                continue;
            double t_point = (x - eye).norm();
            if (occluded(row, col, t_point)) continue;
            stamps[ti].push_back({static_cast<float>(row), static_cast<float>(col),
                                  static_cast<float>(t_point)});
        }
    }

    // Nearest stamp wins per pixel; ties resolved by task order.
    for (size_t ti = 0; ti < tasks.size(); ++ti) {
        const auto& task = tasks[ti];
        for (const auto& s : stamps[ti]) {
            int r0 = std::max(0, static_cast<int>(std::floor(s.row - radius)));
            int r1 = std::min(cam.height - 1, static_cast<int>(std::ceil(s.row + radius)));
            int c0 = std::max(0, static_cast<int>(std::floor(s.col - radius)));
            int c1 = std::min(cam.width - 1, static_cast<int>(std::ceil(s.col + radius)));
            for (int r = r0; r <= r1; ++r)
                for (int col = c0; col <= c1; ++col) {
                    double dr = r - s.row, dc = col - s.col;
                    if (dr * dr + dc * dc > radius * radius) continue;
                    if (s.depth < curve_depth.at(r, col)) {
                        curve_depth.at(r, col) = s.depth;
                        out.instance.at(r, col) = static_cast<uint8_t>(task.cyl + 1);
                        out.cls.at(r, col) = task.cls;
                    }
                }
        }
    }
    return out;
}

}  // namespace cylrev
