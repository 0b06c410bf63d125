#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "cylrev/generate.hpp"
#include "cylrev/model.hpp"
#include "cylrev/model_json.hpp"
#include "cylrev/rng.hpp"
#include "cylrev/sample.hpp"
#include "cylrev/sketch.hpp"

using namespace cylrev;

namespace {

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

}  // namespace

TEST_CASE("sketch sdf: unit circle") {
    SketchProfile p = SketchProfile::unit_circle();
    CHECK(p.sdf({0, 0}) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(p.sdf({1, 0}) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(p.sdf({2, 0}) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sketch sdf: square nearest edge") {
    SketchProfile p = SketchProfile::rectangle(0.5, 0.5);
    CHECK(p.sdf({0.7, 0.0}) == doctest::Approx(0.2).epsilon(1e-9));
    CHECK(p.sdf({0.0, 0.0}) == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(p.sdf({0.7, 0.7}) == doctest::Approx(std::sqrt(0.08)).epsilon(1e-9));
}

TEST_CASE("sketch sdf: degenerate segment rejected") {
    SketchLoop loop;
    loop.segments = {SketchSegment{LineSeg{{0, 0}, {0, 0}}}};
    CHECK_THROWS_AS(SketchProfile({loop}), ValidationError);
}

TEST_CASE("sketch sdf is 1-Lipschitz") {
    SketchProfile shapes[] = {SketchProfile::unit_circle(), SketchProfile::rectangle(0.7, 0.4),
                              SketchProfile::regular_polygon(5, 0.9)};
    Rng rng(7);
    for (const auto& p : shapes) {
        for (int i = 0; i < 300; ++i) {
            Vec2 a{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
            Vec2 b{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
            CHECK(std::abs(p.sdf(a) - p.sdf(b)) <= (a - b).norm() + 1e-6);
        }
    }
}

TEST_CASE("bezier distance stays within subdivision tolerance") {
    // Compare against dense sampling of the exact curve.
    BezierSeg b{{-1, 0}, {-0.5, 1.2}, {0.5, 1.2}, {1, 0}};
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        Vec2 p{rng.uniform(-1.5, 1.5), rng.uniform(-0.5, 1.5)};
        double brute = 1e30;
        for (int j = 0; j <= 20000; ++j) {
            double t = j / 20000.0;
            brute = std::min(brute, (b.point_at(t) - p).norm());
        }
        double got = distance_to_segment(SketchSegment{b}, p);
        CHECK(got == doctest::Approx(brute).epsilon(1e-6));
    }
}

TEST_CASE("model_contains: single cube") {
    CadModel m;
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    CHECK(model_contains(m, {0, 0, 0}));
    CHECK_FALSE(model_contains(m, {0, 0, 0.6}));
    CHECK_FALSE(model_contains(m, {0.6, 0, 0}));
    CHECK(model_contains(m, {0.49, 0.49, 0.49}));
}

TEST_CASE("model_contains: difference removes material") {
    CadModel m;
    m.cylinders.push_back(make_disk(0.8, 1.0));
    auto small = make_disk(0.3, 1.2);
    small.op = BoolOp::Difference;
    m.cylinders.push_back(small);
    CHECK_FALSE(model_contains(m, {0, 0, 0}));       // inside the subtracted core
    CHECK(model_contains(m, {0.6, 0, 0}));           // remaining ring
    CHECK_FALSE(model_contains(m, {0.9, 0, 0}));     // outside everything
}

TEST_CASE("CSG fold identity: one union cylinder equals its own occupancy") {
    auto cyl = make_disk(0.55, 0.8, {0.1, -0.05, 0.2});
    CadModel m;
    m.cylinders.push_back(cyl);
    const int n = 64;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; j += 4)
            for (int k = 0; k < n; k += 4) {
                Vec3 p{-1 + 2.0 * (i + 0.5) / n, -1 + 2.0 * (j + 0.5) / n,
                       -1 + 2.0 * (k + 0.5) / n};
                CHECK(model_contains(m, p) == cyl.contains(p));
            }
}

TEST_CASE("classify_surface_point: cube faces") {
    CadModel m;
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    auto a = classify_surface_point(m, {0.1, 0.1, -0.5});
    CHECK(a.instance == 0);
    CHECK(a.cls == SurfaceClass::Start);
    auto b = classify_surface_point(m, {0.5, 0.1, 0.0});
    CHECK(b.instance == 0);
    CHECK(b.cls == SurfaceClass::Barrel);
    auto c = classify_surface_point(m, {0.1, 0.1, 0.5});
    CHECK(c.instance == 0);
    CHECK(c.cls == SurfaceClass::End);
    auto off = classify_surface_point(m, {0.1, 0.1, 0.2});
    CHECK(off.instance == -1);
    CHECK(off.cls == SurfaceClass::None);
}

TEST_CASE("classify_surface_point: stacked interface owned by the later cylinder") {
    CadModel m;
    m.cylinders.push_back(make_disk(0.6, 0.6, {0, 0, -0.3}));
    m.cylinders.push_back(make_disk(0.4, 0.6, {0, 0, 0.3}));
    // Interface plane z=0; point within the upper (smaller) instance footprint.
    auto r = classify_surface_point(m, {0.1, 0.1, 0.0});
    CHECK(r.instance == 1);
    CHECK(r.cls == SurfaceClass::Start);
}

TEST_CASE("classify_surface_point: carved pocket face belongs to the difference cylinder") {
    CadModel m;
    m.cylinders.push_back(make_box(0.8, 0.8, 1.0));
    auto pocket = make_disk(0.3, 0.6, {0, 0, 0.5});  // bites into the top
    pocket.op = BoolOp::Difference;
    m.cylinders.push_back(pocket);
    // Pocket floor at z = 0.2.
    auto r = classify_surface_point(m, {0.0, 0.0, 0.2});
    CHECK(r.instance == 1);
    CHECK(r.cls == SurfaceClass::Start);
    // Pocket wall.
    auto w = classify_surface_point(m, {0.3, 0.0, 0.35});
    CHECK(w.instance == 1);
    CHECK(w.cls == SurfaceClass::Barrel);
    // The face of the pocket floating above the solid does not exist.
    auto above = classify_surface_point(m, {0.0, 0.3, 0.8});
    CHECK(above.instance == -1);
}

TEST_CASE("sample_surface: cube faces get near-equal shares") {
    CadModel m;
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    auto cloud = sample_surface(m, 6000, 42);
    REQUIRE(cloud.size() == 6000);
    // Count per (class, dominant axis sign) face bucket.
    std::map<int, int> face_count;
    for (size_t i = 0; i < cloud.size(); ++i) {
        const Vec3& p = cloud.points[i];
        int bucket = -1;
        if (cloud.cls[i] == uint8_t(SurfaceClass::Start)) bucket = 0;
        else if (cloud.cls[i] == uint8_t(SurfaceClass::End)) bucket = 1;
        else bucket = (std::abs(p.x) > std::abs(p.y)) ? (p.x > 0 ? 2 : 3) : (p.y > 0 ? 4 : 5);
        face_count[bucket]++;
    }
    REQUIRE(face_count.size() == 6);
    for (const auto& [face, n] : face_count) {
        CHECK(n > 900);
        CHECK(n < 1100);
    }
}

TEST_CASE("sample_surface: deterministic per seed") {
    CadModel m;
    m.cylinders.push_back(make_disk(0.5, 0.9, {0.1, 0, 0}));
    auto a = sample_surface(m, 500, 9);
    auto b = sample_surface(m, 500, 9);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.points[i].x == b.points[i].x);
        CHECK(a.points[i].y == b.points[i].y);
        CHECK(a.points[i].z == b.points[i].z);
        CHECK(a.instance[i] == b.instance[i]);
    }
    auto c = sample_surface(m, 500, 10);
    bool all_same = true;
    for (size_t i = 0; i < a.size(); ++i) all_same = all_same && a.points[i].x == c.points[i].x;
    CHECK_FALSE(all_same);
}

TEST_CASE("sample_surface: no samples in subtracted region") {
    CadModel m;
    m.cylinders.push_back(make_disk(0.8, 1.0));
    auto hole = make_disk(0.3, 1.4);
    hole.op = BoolOp::Difference;
    m.cylinders.push_back(hole);
    auto cloud = sample_surface(m, 2000, 5);
    double eps = default_class_eps();
    for (size_t i = 0; i < cloud.size(); ++i) {
        // Strictly inside the subtracted core there is no material at all.
        Vec2 uv;
        double w;
        m.cylinders[1].to_local(cloud.points[i], uv, w);
        double d = m.cylinders[1].sdf(cloud.points[i]);
        if (d < -eps) {
            CHECK(false);  // sample strictly interior to the subtracted region
        }
    }
    // Classification consistency for every sample: axial offset within slab.
    for (size_t i = 0; i < cloud.size(); ++i) {
        const auto& c = m.cylinders[cloud.instance[i] - 1];
        double w = (cloud.points[i] - c.center).dot(c.axis);
        CHECK(w >= -c.height / 2 - eps);
        CHECK(w <= c.height / 2 + eps);
    }
}

TEST_CASE("generate_random_model: determinism and validity") {
    auto a = generate_random_model(1, 1);
    CHECK(a.cylinders.size() == 1);
    CHECK(a.cylinders[0].op == BoolOp::Union);

    auto b1 = generate_random_model(7, 3);
    auto b2 = generate_random_model(7, 3);
    REQUIRE(b1.cylinders.size() == b2.cylinders.size());
    for (size_t i = 0; i < b1.cylinders.size(); ++i) {
        CHECK(b1.cylinders[i].center.x == b2.cylinders[i].center.x);
        CHECK(b1.cylinders[i].height == b2.cylinders[i].height);
    }
    CHECK_NOTHROW(b1.validate());
    CHECK_THROWS_AS(generate_random_model(1, 0), GenerationError);
    CHECK_THROWS_AS(generate_random_model(1, 9), GenerationError);
}

TEST_CASE("generate_random_model: property sweep over seeds") {
    for (uint64_t seed = 0; seed < 500; ++seed) {
        int k = 1 + static_cast<int>(seed % 4);
        CadModel m = generate_random_model(seed, k);
        REQUIRE(static_cast<int>(m.cylinders.size()) == k);
        CHECK_NOTHROW(m.validate());
        for (const auto& c : m.cylinders) {
            CHECK(std::abs(c.axis.norm() - 1.0) < 1e-9);
            CHECK(c.height >= 0.05);
            CHECK(c.scale > 0);
        }
    }
}

TEST_CASE("model JSON round trip") {
    CadModel m = generate_random_model(11, 3);
    auto j = model_to_json(m);
    CadModel r = model_from_json(j);
    REQUIRE(r.cylinders.size() == m.cylinders.size());
    Rng rng(4);
    for (int i = 0; i < 500; ++i) {
        Vec3 p{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CHECK(model_contains(m, p) == model_contains(r, p));
    }
}

TEST_CASE("invalid models rejected") {
    CadModel m;
    CHECK_THROWS_AS(m.validate(), ValidationError);
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    m.cylinders[0].op = BoolOp::Difference;
    CHECK_THROWS_AS(m.validate(), ValidationError);
}
