#include "cylrev/sample.hpp"

#include <cmath>

#include "cylrev/rng.hpp"

namespace cylrev {

namespace {

struct Face {
    int cyl = 0;
    int kind = 0;  // 0 start cap, 1 end cap, 2 barrel
    double area = 0.0;
};

}  // namespace

LabeledPointCloud sample_surface(const CadModel& model, int n_points, uint64_t seed) {
    if (n_points < 1) throw SamplingError("n_points must be >= 1");
    // Structural checks only: callers may sample rigidly moved copies that
    // leave the normalized cube.
    if (model.cylinders.empty()) throw SamplingError("model has no cylinders");
    for (const auto& c : model.cylinders) c.validate();

    std::vector<Face> faces;
    double total_area = 0.0;
    for (size_t i = 0; i < model.cylinders.size(); ++i) {
        const auto& c = model.cylinders[i];
        double cap = c.scale * c.scale * c.sketch.area();
        double barrel = c.scale * c.sketch.boundary_length() * c.height;
        faces.push_back({static_cast<int>(i), 0, cap});
        faces.push_back({static_cast<int>(i), 1, cap});
        faces.push_back({static_cast<int>(i), 2, barrel});
        total_area += 2 * cap + barrel;
    }
    if (total_area <= 0) throw SamplingError("model has no surface area");

    std::vector<double> cum;
    double acc = 0;
    for (const auto& f : faces) {
        acc += f.area;
        cum.push_back(acc / total_area);
    }

    const double eps = default_class_eps();
    LabeledPointCloud out;
    out.source = CloudSource::Surface;
    Rng rng(seed, 0x5a6d70ULL);

    int guard = 0;
    const int max_draws = n_points * 2000;
    while (static_cast<int>(out.size()) < n_points) {
        if (++guard > max_draws)
            throw SamplingError("surface sampling failed to converge (empty or degenerate solid)");
        double u = rng.next_double();
        size_t fi = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
        if (fi >= faces.size()) fi = faces.size() - 1;
        const Face& f = faces[fi];
        const auto& c = model.cylinders[f.cyl];

        Vec3 x, outward;
        if (f.kind == 2) {
            Vec2 n2;
            Vec2 p2 = c.sketch.boundary_point(rng.next_double(), &n2);
            double w = rng.uniform(-0.5 * c.height, 0.5 * c.height);
            x = c.from_local(p2, w);
            Mat3 fr = c.frame();
            outward = (fr.col(0) * n2.x + fr.col(1) * n2.y).normalized();
        } else {
            // Rejection sample the profile in the unit disk.
            Vec2 p2;
            bool ok = false;
            for (int t = 0; t < 64; ++t) {
                p2 = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
                if (p2.norm2() <= 1.0 && c.sketch.contains(p2)) {
                    ok = true;
                    break;
                }
            }
            if (!ok) continue;
            double w = (f.kind == 0 ? -0.5 : 0.5) * c.height;
            x = c.from_local(p2, w);
            outward = (f.kind == 0) ? -c.axis : c.axis;
        }
        if (c.op == BoolOp::Difference) outward = -outward;

        // Must flip occupancy across the candidate: rejects carved-away and
        // interior (coincident-face) points.
        double off = 2.0 * eps;
        bool in_neg = model_contains(model, x - outward * off);
        bool in_pos = model_contains(model, x + outward * off);
        if (in_neg == in_pos) continue;

        SurfacePointInfo info = classify_surface_point(model, x, eps);
        if (info.instance != f.cyl || info.cls == SurfaceClass::None) continue;

        out.push(x, static_cast<uint8_t>(info.instance + 1), static_cast<uint8_t>(info.cls));
    }
    return out;
}

}  // namespace cylrev
