#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "cylrev/generate.hpp"
#include "cylrev/mec.hpp"
#include "cylrev/ransac.hpp"
#include "cylrev/render.hpp"
#include "cylrev/reveng.hpp"
#include "cylrev/rng.hpp"
#include "cylrev/sample.hpp"

using namespace cylrev;

namespace {

ExtrusionCylinder make_disk(double radius, double height, Vec3 center = {0, 0, 0},
                            Vec3 axis = {0, 0, 1}) {
    ExtrusionCylinder c;
    c.sketch = SketchProfile::unit_circle();
    c.scale = radius;
    c.height = height;
    c.center = center;
    c.axis = axis;
    return c;
}

ExtrusionCylinder make_box(double hw, double hh, double height, Vec3 center = {0, 0, 0},
                           Vec3 axis = {0, 0, 1}) {
    ExtrusionCylinder c;
    double s = std::sqrt(hw * hw + hh * hh);
    c.sketch = SketchProfile::rectangle(hw / s, hh / s);
    c.scale = s;
    c.height = height;
    c.center = center;
    c.axis = axis;
    return c;
}

// Base-loop samples on the visible boundary, labeled like the curve field
// extraction would label them.
LabeledPointCloud sample_curve_cloud(const CadModel& model, int per_loop, uint64_t seed) {
    LabeledPointCloud out;
    out.source = CloudSource::Curve;
    Rng rng(seed);
    for (size_t ci = 0; ci < model.cylinders.size(); ++ci) {
        const auto& c = model.cylinders[ci];
        for (int side = 0; side < 2; ++side) {
            double w = (side == 0 ? -0.5 : 0.5) * c.height;
            for (int i = 0; i < per_loop; ++i) {
                Vec2 p2 = c.sketch.boundary_point(rng.next_double());
                Vec3 x = c.from_local(p2, w);
                if (std::abs(model_pseudo_sdf(model, x)) > 1e-3) continue;  // hidden
                out.push(x, static_cast<uint8_t>(ci + 1), static_cast<uint8_t>(side + 1));
            }
        }
    }
    return out;
}

std::vector<Vec2> circle_points(int n, double radius, Vec2 center = {0, 0}) {
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) {
        double a = 2 * kPi * i / n;
        pts.push_back(center + Vec2{radius * std::cos(a), radius * std::sin(a)});
    }
    return pts;
}

}  // namespace

TEST_CASE("minimal enclosing circle") {
    // Square corners: circumradius sqrt(2)/2.
    std::vector<Vec2> sq{{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
    auto c = minimal_enclosing_circle(sq);
    CHECK(c.radius == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-9));
    CHECK(c.center.norm() < 1e-9);

    auto one = minimal_enclosing_circle({{1, 2}});
    CHECK(one.radius == 0.0);

    // Random sets: every point inside, and the circle is supported by inputs.
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        std::vector<Vec2> pts;
        int n = 3 + rng.next_below(40);
        for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2)});
        auto mec = minimal_enclosing_circle(pts);
        int on_boundary = 0;
        for (const auto& p : pts) {
            double d = (p - mec.center).norm();
            CHECK(d <= mec.radius + 1e-9);
            if (d > mec.radius - 1e-7) ++on_boundary;
        }
        CHECK(on_boundary >= 2);
    }
}

TEST_CASE("ransac_plane: exact, noisy, outlier recall") {
    std::vector<Vec3> tri{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    auto exact = ransac_plane(tri, 100, 0.01, 1);
    CHECK(std::abs(exact.normal.z) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(exact.offset == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(ransac_plane({{0, 0, 0}, {1, 1, 1}}, 10, 0.01, 1), RansacError);

    Rng rng(4);
    std::vector<Vec3> noisy;
    for (int i = 0; i < 200; ++i) {
        double g = 0;  // cheap normal-ish noise
        for (int t = 0; t < 12; ++t) g += rng.next_double();
        noisy.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), (g - 6.0) * 0.005});
    }
    auto fit = ransac_plane(noisy, 1000, 0.01, 7);
    double angle = rad2deg(std::acos(clampd(std::abs(fit.normal.z), 0.0, 1.0)));
    CHECK(angle < 1.0);

    // 60% inliers on z=0, 40% uniform outliers.
    std::vector<Vec3> mixed;
    std::vector<bool> is_inlier;
    for (int i = 0; i < 120; ++i) {
        mixed.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.003, 0.003)});
        is_inlier.push_back(true);
    }
    for (int i = 0; i < 80; ++i) {
        mixed.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.05, 1.0)});
        is_inlier.push_back(false);
    }
    auto mixed_fit = ransac_plane(mixed, 1000, 0.01, 11);
    int recalled = 0, total = 0;
    for (size_t i = 0; i < mixed.size(); ++i) {
        if (!is_inlier[i]) continue;
        ++total;
        recalled += mixed_fit.inliers[i];
    }
    CHECK(double(recalled) / total >= 0.95);
}

TEST_CASE("estimate_axis: surface first, curve fallback below threshold") {
    CadModel m;
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    auto cloud = sample_surface(m, 3000, 3);
    std::vector<Vec3> base, barrel;
    for (size_t i = 0; i < cloud.size(); ++i)
        (cloud.cls[i] == 3 ? barrel : base).push_back(cloud.points[i]);
    RevengConfig cfg;
    auto ax = estimate_axis(base, {}, cfg);
    CHECK_FALSE(ax.curve_fallback);
    CHECK(rad2deg(std::acos(clampd(std::abs(ax.axis.z), 0.0, 1.0))) < 1.0);

    // Only 10 base points: falls back to curve points.
    std::vector<Vec3> few(base.begin(), base.begin() + 10);
    auto curve_pts = sample_curve_cloud(m, 400, 5);
    auto fb = estimate_axis(few, curve_pts.points, cfg);
    CHECK(fb.curve_fallback);
    CHECK(rad2deg(std::acos(clampd(std::abs(fb.axis.z), 0.0, 1.0))) < 2.0);

    CHECK_THROWS_AS(estimate_axis({}, {}, cfg), RevengError);
}

TEST_CASE("project_and_normalize: circle scale, square circumradius, degenerate") {
    std::vector<Vec3> ring;
    for (int i = 0; i < 256; ++i) {
        double a = 2 * kPi * i / 256;
        ring.push_back({0.4 * std::cos(a), 0.4 * std::sin(a), 0.7});
    }
    auto proj = project_and_normalize(ring, {0, 0, 1});
    CHECK(proj.scale == doctest::Approx(0.4).epsilon(1e-3));
    for (const auto& p : proj.points) CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-6));

    std::vector<Vec3> sq{{-0.5, -0.5, 0}, {0.5, -0.5, 0}, {0.5, 0.5, 0}, {-0.5, 0.5, 0}};
    auto pr = project_and_normalize(sq, {0, 0, 1});
    CHECK(pr.scale == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-3));

    std::vector<Vec3> clump(10, Vec3{0.3, 0.3, 0.3});
    CHECK_THROWS_AS(project_and_normalize(clump, {0, 0, 1}), RevengError);
}

TEST_CASE("estimate_normals_2d: circle radial, square faces, order invariance") {
    auto circle = circle_points(128, 1.0);
    auto oriented = estimate_normals_2d(circle);
    int good = 0;
    for (size_t i = 0; i < oriented.size(); ++i) {
        Vec2 radial = circle[i].normalized();
        double cosang = clampd(oriented[i].normal.dot(radial), -1.0, 1.0);
        if (rad2deg(std::acos(cosang)) < 5.0) ++good;
    }
    CHECK(double(good) / oriented.size() >= 0.95);

    // Square boundary (corners excluded) -> face normals.
    std::vector<Vec2> sq;
    for (int i = 1; i < 32; ++i) {
        double t = -0.5 + i / 32.0;
        sq.push_back({t, -0.5});
        sq.push_back({0.5, t});
        sq.push_back({-t, 0.5});
        sq.push_back({-0.5, -t});
    }
    auto sq_oriented = estimate_normals_2d(sq);
    int sq_good = 0;
    for (size_t i = 0; i < sq.size(); ++i) {
        const Vec2 p = sq[i];
        Vec2 expected = std::abs(p.x) > std::abs(p.y) ? Vec2{p.x > 0 ? 1.0 : -1.0, 0}
                                                      : Vec2{0, p.y > 0 ? 1.0 : -1.0};
        double cosang = clampd(sq_oriented[i].normal.dot(expected), -1.0, 1.0);
        if (rad2deg(std::acos(cosang)) < 5.0) ++sq_good;
    }
    CHECK(double(sq_good) / sq.size() >= 0.9);

    // Reversing the input order must not change directions.
    std::vector<Vec2> rev(circle.rbegin(), circle.rend());
    auto rev_oriented = estimate_normals_2d(rev);
    for (size_t i = 0; i < rev.size(); ++i) {
        const Vec2& a = rev_oriented[i].normal;
        const Vec2& b = oriented[rev.size() - 1 - i].normal;
        CHECK(a.dot(b) > 0.99);
    }

    CHECK_THROWS_AS(estimate_normals_2d(circle_points(5, 1.0)), SketchFitError);
}

TEST_CASE("fit_implicit_sketch: circle zero set, outside corner, annulus") {
    auto oriented = estimate_normals_2d(circle_points(192, 1.0));
    SketchGrid grid = fit_implicit_sketch(oriented, 128, 2);
    CHECK(grid.at(127, 127) > 0);  // corner (1.2, 1.2)
    CHECK(grid.at(64, 64) < 0);    // center inside

    // Zero level set within 2 cells of the unit circle.
    double cell = grid.spacing();
    for (int iy = 1; iy < 127; ++iy)
        for (int ix = 1; ix < 127; ++ix) {
            bool crossing = (grid.at(ix, iy) < 0) != (grid.at(ix + 1, iy) < 0) ||
                            (grid.at(ix, iy) < 0) != (grid.at(ix, iy + 1) < 0);
            if (!crossing) continue;
            double r = grid.node(ix, iy).norm();
            CHECK(std::abs(r - 1.0) < 2 * cell + 1e-9);
        }

    // Annulus: negative only between the circles.
    auto outer = circle_points(160, 1.0);
    auto inner = circle_points(90, 0.5);
    std::vector<Vec2> both = outer;
    both.insert(both.end(), inner.begin(), inner.end());
    auto ann_oriented = estimate_normals_2d(both);
    SketchGrid ann = fit_implicit_sketch(ann_oriented, 128, 2);
    int wrong = 0, checked = 0;
    for (int iy = 0; iy < 128; iy += 2)
        for (int ix = 0; ix < 128; ix += 2) {
            double r = ann.node(ix, iy).norm();
            if (std::abs(r - 1.0) < 0.08 || std::abs(r - 0.5) < 0.08) continue;  // near boundary
            ++checked;
            bool inside_annulus = r > 0.5 && r < 1.0;
            if ((ann.at(ix, iy) < 0) != inside_annulus) ++wrong;
        }
    CHECK(double(wrong) / checked < 0.02);
}

TEST_CASE("extract_sketch_loops: analytic circle, empty grid, annulus orientation") {
    SketchGrid grid;
    grid.res = 128;
    grid.values.assign(128 * 128, 0.0);
    for (int iy = 0; iy < 128; ++iy)
        for (int ix = 0; ix < 128; ++ix) {
            Vec2 p = grid.node(ix, iy);
            grid.at(ix, iy) = p.norm2() - 0.25;
        }
    auto loops = extract_sketch_loops(grid);
    REQUIRE(loops.polylines.size() == 1);
    double cell = grid.spacing();
    for (const auto& p : loops.polylines[0])
        CHECK(std::abs(p.norm() - 0.5) < cell + 1e-9);
    REQUIRE(loops.splines.size() == 1);

    SketchGrid pos = grid;
    for (auto& v : pos.values) v = 1.0;
    CHECK_THROWS_AS(extract_sketch_loops(pos), SketchFitError);

    // Annulus: two loops with opposite signed area.
    SketchGrid ann = grid;
    for (int iy = 0; iy < 128; ++iy)
        for (int ix = 0; ix < 128; ++ix) {
            double r = ann.node(ix, iy).norm();
            ann.at(ix, iy) = std::max(r - 1.0, 0.45 - r);
        }
    auto two = extract_sketch_loops(ann);
    REQUIRE(two.polylines.size() == 2);
    auto signed_area = [](const std::vector<Vec2>& poly) {
        double a = 0;
        for (size_t i = 0; i < poly.size(); ++i) a += poly[i].cross(poly[(i + 1) % poly.size()]);
        return a / 2;
    };
    double a0 = signed_area(two.polylines[0]), a1 = signed_area(two.polylines[1]);
    CHECK(a0 * a1 < 0);

    // Closure and non-self-intersection of marching-squares loops.
    for (const auto& poly : two.polylines) {
        auto seg_intersect = [](Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
            Vec2 r = b - a, s2 = d - c;
            double denom = r.cross(s2);
            if (std::abs(denom) < 1e-15) return false;
            double t = (c - a).cross(s2) / denom;
            double u = (c - a).cross(r) / denom;
            return t > 1e-9 && t < 1 - 1e-9 && u > 1e-9 && u < 1 - 1e-9;
        };
        size_t n = poly.size();
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 2; j < n; ++j) {
                if (i == 0 && j == n - 1) continue;
                CHECK_FALSE(seg_intersect(poly[i], poly[(i + 1) % n], poly[j],
                                          poly[(j + 1) % n]));
            }
    }
}

TEST_CASE("estimate_height_center: curve route and barrel fallback") {
    RevengConfig cfg;
    std::vector<Vec3> start, end, barrel;
    for (int i = 0; i < 64; ++i) {
        double a = 2 * kPi * i / 64;
        start.push_back({0.3 * std::cos(a), 0.3 * std::sin(a), -0.35});
        end.push_back({0.3 * std::cos(a), 0.3 * std::sin(a), 0.35});
    }
    auto hc = estimate_height_center(start, end, {}, {0, 0, 1}, cfg);
    CHECK_FALSE(hc.barrel_fallback);
    CHECK(hc.height == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(hc.center.norm() < 1e-9);

    Rng rng(2);
    for (int i = 0; i < 600; ++i) {
        double a = rng.uniform(0, 2 * kPi);
        barrel.push_back({0.3 * std::cos(a), 0.3 * std::sin(a), rng.uniform(-0.35, 0.35)});
    }
    auto fb = estimate_height_center(start, {}, barrel, {0, 0, 1}, cfg);
    CHECK(fb.barrel_fallback);
    CHECK(std::abs(fb.height - 0.7) < 0.03);

    CHECK_THROWS_AS(estimate_height_center({}, {}, {}, {0, 0, 1}, cfg), RevengError);
}

TEST_CASE("reconstruct_from_clouds: single cube, noise-free") {
    CadModel m;
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    auto surf = sample_surface(m, 6000, 12);
    auto curve = sample_curve_cloud(m, 1500, 13);
    RevengConfig cfg;
    cfg.threads = 2;
    auto result = reconstruct_from_clouds(surf, curve, cfg);
    REQUIRE(result.estimates.size() == 1);
    const auto& est = result.estimates[0];
    CHECK(rad2deg(std::acos(clampd(std::abs(est.axis.z), 0.0, 1.0))) <= 1.0);
    CHECK(std::abs(est.height - 1.0) <= 0.05);
    CHECK(est.center.norm() <= 0.05);
    CHECK(est.provenance.axis_from == "surface");
    CHECK(est.provenance.hc_from == "curve");
    // Fitted sketch encloses roughly the right area.
    CadModel rebuilt;
    rebuilt.cylinders.push_back(est.to_cylinder());
    double area = rebuilt.cylinders[0].sketch.area() * est.scale * est.scale;
    CHECK(area == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("reconstruct_from_clouds: sparse instance reported missed") {
    CadModel m;
    m.cylinders.push_back(make_disk(0.6, 0.5, {0, 0, -0.25}));
    m.cylinders.push_back(make_disk(0.25, 0.5, {0, 0, 0.3}));
    auto surf = sample_surface(m, 4000, 4);
    auto curve = sample_curve_cloud(m, 800, 5);
    // Cripple instance 2: strip it from the surface cloud and leave too few
    // curve points to reconstruct from.
    LabeledPointCloud surf2, curve2;
    surf2.source = surf.source;
    curve2.source = curve.source;
    for (size_t i = 0; i < surf.size(); ++i)
        if (surf.instance[i] != 2) surf2.push(surf.points[i], surf.instance[i], surf.cls[i]);
    int kept = 0;
    for (size_t i = 0; i < curve.size(); ++i) {
        if (curve.instance[i] == 2 && ++kept > 5) continue;
        curve2.push(curve.points[i], curve.instance[i], curve.cls[i]);
    }
    RevengConfig cfg;
    auto result = reconstruct_from_clouds(surf2, curve2, cfg);
    CHECK(result.estimates.size() == 1);
    CHECK(result.missed_instances.size() == 1);
}

TEST_CASE("search_binary_ops: forced union for K=1, recovers union and difference") {
    CadModel gt_union;
    gt_union.cylinders.push_back(make_box(0.6, 0.6, 0.5, {0, 0, -0.25}));
    gt_union.cylinders.push_back(make_disk(0.3, 0.6, {0, 0, 0.25}));

    CadModel gt_diff = gt_union;
    gt_diff.cylinders[1].op = BoolOp::Difference;
    gt_diff.cylinders[1].center = {0, 0, 0.1};

    auto cams = fibonacci_views(12, 2.8, 96, 96);
    auto to_estimates = [](const CadModel& m) {
        std::vector<ExtrusionEstimate> out;
        for (const auto& c : m.cylinders) {
            ExtrusionEstimate e;
            e.axis = c.axis;
            e.center = c.center;
            e.height = c.height;
            e.scale = c.scale;
            e.loops = c.sketch.loops();
            out.push_back(std::move(e));
        }
        return out;
    };
    auto silhouettes = [&](const CadModel& m) {
        std::vector<LabelImage> sils;
        for (const auto& cam : cams) sils.push_back(render_silhouette(m, cam, 2));
        return sils;
    };

    // K=1: single candidate, union.
    CadModel single;
    single.cylinders.push_back(make_disk(0.5, 0.8));
    auto r1 = search_binary_ops(to_estimates(single), silhouettes(single), cams, 2);
    CHECK(r1.candidates_evaluated == 1);
    CHECK(r1.ops == std::vector<BoolOp>{BoolOp::Union});

    auto ru = search_binary_ops(to_estimates(gt_union), silhouettes(gt_union), cams, 2);
    CHECK(ru.candidates_evaluated == 2);
    CHECK(ru.ops == std::vector<BoolOp>{BoolOp::Union, BoolOp::Union});

    auto rd = search_binary_ops(to_estimates(gt_diff), silhouettes(gt_diff), cams, 2);
    CHECK(rd.ops == std::vector<BoolOp>{BoolOp::Union, BoolOp::Difference});
}

TEST_CASE("reconstruction equivariance: scale and rigid motion") {
    CadModel m;
    m.cylinders.push_back(make_disk(0.45, 0.8, {0.1, -0.05, 0.0}));
    auto surf = sample_surface(m, 5000, 21);
    auto curve = sample_curve_cloud(m, 1200, 22);
    RevengConfig cfg;
    auto base = reconstruct_from_clouds(surf, curve, cfg).estimates[0];

    // Scale by lambda.
    const double lam = 0.5;
    LabeledPointCloud ssurf = surf, scurve = curve;
    for (auto& p : ssurf.points) p *= lam;
    for (auto& p : scurve.points) p *= lam;
    auto scaled = reconstruct_from_clouds(ssurf, scurve, cfg).estimates[0];
    CHECK(std::abs(scaled.axis.dot(base.axis)) > 1.0 - 1e-6);
    CHECK(scaled.height == doctest::Approx(base.height * lam).epsilon(1e-3));
    CHECK(scaled.scale == doctest::Approx(base.scale * lam).epsilon(1e-3));
    CHECK(scaled.center.norm() == doctest::Approx(base.center.norm() * lam).epsilon(1e-3));

    // Rigid motion.
    Mat3 rot = rotation_z_to(Vec3{0.36, -0.48, 0.8});  // proper rotation
    Vec3 t{0.2, -0.1, 0.15};
    LabeledPointCloud rsurf = surf, rcurve = curve;
    for (auto& p : rsurf.points) p = rot * p + t;
    for (auto& p : rcurve.points) p = rot * p + t;
    auto moved = reconstruct_from_clouds(rsurf, rcurve, cfg).estimates[0];
    Vec3 expected_axis = rot * base.axis;
    CHECK(std::abs(moved.axis.dot(expected_axis)) > 1.0 - 1e-6);
    Vec3 expected_center = rot * base.center + t;
    CHECK((moved.center - expected_center).norm() < 2e-3);
    CHECK(moved.height == doctest::Approx(base.height).epsilon(1e-3));
    CHECK(moved.scale == doctest::Approx(base.scale).epsilon(0.02));

    // Normalized sketch is rotation-invariant up to an in-plane rotation:
    // compare sorted radius profiles of the loops.
    auto radii = [](const ExtrusionEstimate& e) {
        std::vector<double> rs;
        for (const auto& poly : e.polylines)
            for (const auto& p : poly) rs.push_back(p.norm());
        std::sort(rs.begin(), rs.end());
        return rs;
    };
    auto r0 = radii(base), r1 = radii(moved);
    REQUIRE(!r0.empty());
    REQUIRE(!r1.empty());
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        double a = r0[size_t(q * (r0.size() - 1))];
        double b = r1[size_t(q * (r1.size() - 1))];
        CHECK(std::abs(a - b) < 0.03);
    }
}
