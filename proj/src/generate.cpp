#include "cylrev/generate.hpp"

#include <cmath>
#include <map>

#include "cylrev/rng.hpp"
#include "cylrev/sample.hpp"

namespace cylrev {

namespace {

SketchProfile scale_profile(const SketchProfile& p, double f) {
    std::vector<SketchLoop> loops;
    for (const auto& loop : p.loops()) {
        SketchLoop out;
        for (const auto& seg : loop.segments) {
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, LineSeg>) {
                        out.segments.push_back(LineSeg{v.p0 * f, v.p1 * f});
                    } else if constexpr (std::is_same_v<T, ArcSeg>) {
                        out.segments.push_back(ArcSeg{v.center * f, v.radius * f,
                                                      v.start_angle, v.sweep});
                    } else {
                        out.segments.push_back(BezierSeg{v.p0 * f, v.p1 * f, v.p2 * f, v.p3 * f});
                    }
                },
                seg);
        }
        loops.push_back(std::move(out));
    }
    return SketchProfile(std::move(loops));
}

SketchProfile rounded_rectangle(double hw, double hh, double r) {
    SketchLoop loop;
    double ax = hw - r, ay = hh - r;
    loop.segments = {
        SketchSegment{LineSeg{{-ax, -hh}, {ax, -hh}}},
        SketchSegment{ArcSeg{{ax, -ay}, r, -kPi / 2, kPi / 2}},
        SketchSegment{LineSeg{{hw, -ay}, {hw, ay}}},
        SketchSegment{ArcSeg{{ax, ay}, r, 0, kPi / 2}},
        SketchSegment{LineSeg{{ax, hh}, {-ax, hh}}},
        SketchSegment{ArcSeg{{-ax, ay}, r, kPi / 2, kPi / 2}},
        SketchSegment{LineSeg{{-hw, ay}, {-hw, -ay}}},
        SketchSegment{ArcSeg{{-ax, -ay}, r, kPi, kPi / 2}},
    };
    return SketchProfile({loop}, false);
}

SketchProfile annulus(double inner_r) {
    SketchLoop outer, hole;
    outer.segments.push_back(ArcSeg{{0, 0}, 1.0, 0.0, 2 * kPi});
    hole.segments.push_back(ArcSeg{{0, 0}, inner_r, 0.0, -2 * kPi});  // CW
    return SketchProfile({outer, hole}, false);
}

SketchProfile convex_bezier_loop(Rng& rng) {
    int m = 6 + static_cast<int>(rng.next_below(3));
    std::vector<Vec2> pts;
    std::vector<double> angles;
    for (int i = 0; i < m; ++i)
        angles.push_back(2 * kPi * (i + 0.2 + 0.6 * rng.next_double()) / m);
    for (double a : angles) {
        double r = rng.uniform(0.55, 1.0);
        pts.push_back({r * std::cos(a), r * std::sin(a)});
    }
    // Closed Catmull-Rom through the points, one cubic per edge.
    SketchLoop loop;
    for (int i = 0; i < m; ++i) {
        Vec2 pm1 = pts[(i + m - 1) % m], p0 = pts[i];
        Vec2 p1 = pts[(i + 1) % m], p2 = pts[(i + 2) % m];
        loop.segments.push_back(
            BezierSeg{p0, p0 + (p1 - pm1) / 6.0, p1 - (p2 - p0) / 6.0, p1});
    }
    return SketchProfile({loop}, false);
}

SketchProfile random_profile(Rng& rng) {
    int type = static_cast<int>(rng.next_below(6));
    SketchProfile p;
    switch (type) {
        case 0: p = SketchProfile::unit_circle(); break;
        case 1: p = SketchProfile::rectangle(rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)); break;
        case 2: p = SketchProfile::regular_polygon(3 + static_cast<int>(rng.next_below(6)), 1.0); break;
        case 3: {
            double hw = rng.uniform(0.5, 0.9), hh = rng.uniform(0.5, 0.9);
            p = rounded_rectangle(hw, hh, rng.uniform(0.15, 0.4) * std::min(hw, hh));
            break;
        }
        case 4: p = convex_bezier_loop(rng); break;
        default: p = annulus(rng.uniform(0.35, 0.6)); break;
    }
    // Normalize so the profile exactly fills the unit disk, then validate.
    return scale_profile(p, 0.99 / std::max(p.max_radius(), 1e-9));
}

Vec3 random_unit(Rng& rng) {
    for (;;) {
        Vec3 v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        double n2 = v.norm2();
        if (n2 > 1e-4 && n2 <= 1.0) return v / std::sqrt(n2);
    }
}

}  // namespace

CadModel generate_random_model(uint64_t seed, int k, const GeneratorConfig& cfg) {
    if (k < 1 || k > kMaxInstances) throw GenerationError("instance count out of range");
    for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
        Rng rng(seed, 0xce11 + attempt);
        CadModel model;
        for (int i = 0; i < k; ++i) {
            ExtrusionCylinder c;
            c.sketch = random_profile(rng);
            if (rng.bernoulli(cfg.axis_canonical_prob)) {
                int a = static_cast<int>(rng.next_below(3));
                c.axis = a == 0 ? Vec3{1, 0, 0} : a == 1 ? Vec3{0, 1, 0} : Vec3{0, 0, 1};
            } else {
                c.axis = random_unit(rng);
            }
            c.height = rng.uniform(cfg.min_height, cfg.max_height);
            c.scale = rng.uniform(cfg.min_scale, cfg.max_scale);
            c.center = {rng.uniform(-cfg.center_range, cfg.center_range),
                        rng.uniform(-cfg.center_range, cfg.center_range),
                        rng.uniform(-cfg.center_range, cfg.center_range)};
            c.op = (i > 0 && rng.bernoulli(cfg.difference_prob)) ? BoolOp::Difference
                                                                 : BoolOp::Union;
            if (c.op == BoolOp::Difference && i > 0) {
                // Anchor subtractions near an earlier union so they carve
                // something instead of floating in air.
                const auto& base = model.cylinders[static_cast<size_t>(rng.next_below(i))];
                Vec3 jitter{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                            rng.uniform(-0.3, 0.3)};
                c.center = base.center + jitter;
                c.scale = std::min(c.scale, 0.8 * base.scale);
            }
            model.cylinders.push_back(std::move(c));
        }

        // Normalize into [-1,1]^3 with margin.
        Aabb b = model.bounds();
        Vec3 mid = b.center();
        Vec3 ext = b.extent();
        double max_ext = std::max({ext.x, ext.y, ext.z, 1e-9});
        double f = 2.0 * cfg.fit_margin / max_ext;
        for (auto& c : model.cylinders) {
            c.center = (c.center - mid) * f;
            c.height *= f;
            c.scale *= f;
        }

        try {
            model.validate(true);
            for (const auto& c : model.cylinders)
                if (c.height < 0.05) throw ValidationError("height below floor");
            // Every instance must own a visible share of the boundary.
            LabeledPointCloud probe = sample_surface(model, 2048, hash_combine(seed, attempt));
            std::map<int, int> counts;
            for (uint8_t id : probe.instance) counts[id]++;
            bool ok = static_cast<int>(counts.size()) == k;
            for (const auto& [id, n] : counts)
                ok = ok && n >= static_cast<int>(cfg.min_instance_frac * 2048);
            if (!ok) continue;
            return model;
        } catch (const std::runtime_error&) {
            continue;
        }
    }
    throw GenerationError("failed to generate a valid model after max attempts");
}

}  // namespace cylrev
