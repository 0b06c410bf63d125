#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "cylrev/generate.hpp"
#include "cylrev/noise.hpp"
#include "cylrev/render.hpp"
#include "cylrev/sample.hpp"

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

Camera top_down_camera(int res = 200) {
    return look_at_camera({0, 0, 2.8}, {0, 0, 0}, res, res, 40.0);
}

}  // namespace

TEST_CASE("fibonacci_views basics") {
    CHECK_THROWS_AS(fibonacci_views(0, 2.8, 100, 100), ValidationError);

    auto one = fibonacci_views(1, 2.8, 100, 100);
    REQUIRE(one.size() == 1);
    CHECK(one[0].center().norm() == doctest::Approx(2.8).epsilon(1e-12));

    auto cams = fibonacci_views(50, 2.8, 64, 64);
    REQUIRE(cams.size() == 50);
    // Optical axis passes through the origin.
    for (const auto& cam : cams) {
        Vec3 fwd = cam.rot.row(2);
        Vec3 c = cam.center();
        CHECK(c.cross(fwd).norm() < 1e-9);
        CHECK(fwd.dot(-c.normalized()) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK_NOTHROW(cam.validate());
    }
    // Minimum pairwise angular separation of the view directions.
    double min_deg = 180.0;
    for (size_t i = 0; i < cams.size(); ++i)
        for (size_t j = i + 1; j < cams.size(); ++j) {
            double d = cams[i].center().normalized().dot(cams[j].center().normalized());
            min_deg = std::min(min_deg, rad2deg(std::acos(clampd(d, -1.0, 1.0))));
        }
    CHECK(min_deg >= 14.0);
}

TEST_CASE("surface labels: cube viewed from above") {
    CadModel m;
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    Camera cam = top_down_camera();
    auto r = render_surface_labels(m, cam);

    // Analytic footprint: half-size fx * 0.5 / 2.3 pixels around the center.
    double half_px = cam.fx * 0.5 / 2.3;
    CHECK(r.cls.at(100, 100) == uint8_t(SurfaceClass::End));
    CHECK(r.instance.at(100, 100) == 1);
    CHECK(r.cls.at(100, 100 + int(half_px) - 3) == uint8_t(SurfaceClass::End));
    CHECK(r.cls.at(100, 100 + int(half_px) + 3) == 0);
    CHECK(r.instance.at(5, 5) == 0);
    CHECK(r.cls.at(5, 5) == 0);
    CHECK(!std::isfinite(r.depth.at(5, 5)));
    CHECK(r.depth.at(100, 100) == doctest::Approx(2.3).epsilon(1e-4));

    // Measured side length of the end face.
    int run = 0;
    for (int c = 0; c < cam.width; ++c)
        if (r.cls.at(100, c) == uint8_t(SurfaceClass::End)) ++run;
    CHECK(std::abs(run - 2 * half_px) <= 2.0);
}

TEST_CASE("surface labels: visible instance set matches supersampled render") {
    CadModel m;
    m.cylinders.push_back(make_disk(0.7, 0.4, {0, 0, -0.3}));
    m.cylinders.push_back(make_disk(0.35, 0.5, {0.1, 0, 0.15}));
    Camera cam = look_at_camera({1.8, 1.4, 1.6}, {0, 0, 0}, 160, 160, 40.0);
    auto r = render_surface_labels(m, cam);
    Camera cam2 = look_at_camera({1.8, 1.4, 1.6}, {0, 0, 0}, 320, 320, 40.0);
    auto r2 = render_surface_labels(m, cam2);

    std::set<int> ids, ids2;
    for (uint8_t v : r.instance.data)
        if (v) ids.insert(v);
    for (uint8_t v : r2.instance.data)
        if (v) ids2.insert(v);
    CHECK(ids == ids2);
    CHECK(ids == std::set<int>{1, 2});
}

TEST_CASE("silhouette equals foreground of the instance map") {
    CadModel m = generate_random_model(3, 2);
    Camera cam = look_at_camera({2.0, -1.5, 1.2}, {0, 0, 0}, 120, 120, 40.0);
    auto surf = render_surface_labels(m, cam);
    auto sil = render_silhouette(m, cam);
    int diff = 0;
    for (size_t i = 0; i < sil.data.size(); ++i)
        diff += (sil.data[i] != 0) != (surf.instance.data[i] != 0);
    CHECK(diff == 0);

    // Empty scene region: camera pointed away.
    CadModel tiny;
    tiny.cylinders.push_back(make_disk(0.2, 0.2, {0.7, 0.7, 0.7}));
    Camera away = look_at_camera({2.8, 0, 0}, {3.8, 0, 0}, 64, 64, 40.0);
    auto empty = render_silhouette(tiny, away);
    for (uint8_t v : empty.data) CHECK(v == 0);
}

TEST_CASE("curve labels: cube outline ring with requested stroke width") {
    CadModel m;
    m.cylinders.push_back(make_box(0.5, 0.5, 1.0));
    Camera cam = top_down_camera();
    auto r = render_curve_labels(m, cam, 5.0);

    int start_px = 0, end_px = 0;
    for (uint8_t v : r.cls.data) {
        if (v == 1) ++start_px;
        if (v == 2) ++end_px;
    }
    CHECK(start_px == 0);  // bottom loop hidden under the cube
    CHECK(end_px > 0);

    // Stroke width: measure the fg run crossing the left edge on the center row.
    int first = -1, last = -1;
    for (int c = 0; c < 100; ++c) {
        if (r.cls.at(100, c) == 2) {
            if (first < 0) first = c;
            last = c;
        }
    }
    REQUIRE(first >= 0);
    int width = last - first + 1;
    CHECK(width >= 4);
    CHECK(width <= 7);

    // Halving the stroke width roughly halves the foreground area.
    auto r25 = render_curve_labels(m, cam, 2.5);
    int fg25 = 0, fg5 = 0;
    for (uint8_t v : r25.instance.data) fg25 += v != 0;
    for (uint8_t v : r.instance.data) fg5 += v != 0;
    double ratio = double(fg25) / double(fg5);
    CHECK(ratio > 0.35);
    CHECK(ratio < 0.65);
}

TEST_CASE("curve labels: fully embedded start loop renders no pixels") {
    CadModel m;
    m.cylinders.push_back(make_box(0.9, 0.9, 0.8, {0, 0, -0.5}));
    // Rod whose start plane is buried inside the block below.
    m.cylinders.push_back(make_disk(0.2, 0.8, {0, 0, 0.25}));
    auto cams = fibonacci_views(20, 2.8, 160, 160);
    int rod_start_px = 0, rod_end_px = 0;
    for (const auto& cam : cams) {
        auto r = render_curve_labels(m, cam, 5.0);
        for (size_t i = 0; i < r.cls.data.size(); ++i) {
            if (r.instance.data[i] == 2 && r.cls.data[i] == 1) ++rod_start_px;
            if (r.instance.data[i] == 2 && r.cls.data[i] == 2) ++rod_end_px;
        }
    }
    CHECK(rod_start_px == 0);
    CHECK(rod_end_px > 0);
}

TEST_CASE("cross-view label consistency: unprojected pixels classify to their label") {
    CadModel m = generate_random_model(12, 3);
    auto cams = fibonacci_views(6, 2.8, 140, 140);
    int total = 0, consistent = 0;
    for (const auto& cam : cams) {
        auto r = render_surface_labels(m, cam);
        for (int row = 0; row < cam.height; ++row)
            for (int col = 0; col < cam.width; ++col) {
                uint8_t id = r.instance.at(row, col);
                if (!id) continue;
                ++total;
                Ray ray = cam.pixel_ray(row, col);
                auto info = classify_surface_point(m, ray.at(r.depth.at(row, col)));
                if (info.instance + 1 == id && uint8_t(info.cls) == r.cls.at(row, col))
                    ++consistent;
            }
    }
    REQUIRE(total > 0);
    CHECK(double(consistent) / total >= 0.99);
}

TEST_CASE("curve pixels lie near a same-instance surface boundary") {
    CadModel m = generate_random_model(5, 2);
    Camera cam = look_at_camera({1.9, 1.3, 1.8}, {0, 0, 0}, 160, 160, 40.0);
    double width_px = 5.0;
    auto surf = render_surface_labels(m, cam);
    auto curve = render_curve_labels(m, cam, width_px);

    // Base loops separate a base face from either another region or the same
    // instance's barrel, so "boundary" means a change in the combined
    // (instance, class) labeling.
    auto is_boundary = [&](int r, int c, uint8_t id) {
        if (surf.instance.at(r, c) != id) return false;
        uint8_t q = surf.cls.at(r, c);
        for (auto [dr, dc] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            int rr = r + dr, cc = c + dc;
            if (!surf.instance.in_bounds(rr, cc)) return true;
            if (surf.instance.at(rr, cc) != id || surf.cls.at(rr, cc) != q) return true;
        }
        return false;
    };

    int bad = 0, total = 0;
    int rad = static_cast<int>(width_px) + 1;
    for (int r = 0; r < cam.height; ++r)
        for (int c = 0; c < cam.width; ++c) {
            uint8_t id = curve.instance.at(r, c);
            if (!id) continue;
            ++total;
            bool ok = false;
            for (int dr = -rad; dr <= rad && !ok; ++dr)
                for (int dc = -rad; dc <= rad && !ok; ++dc) {
                    int rr = r + dr, cc = c + dc;
                    if (surf.instance.in_bounds(rr, cc) && is_boundary(rr, cc, id)) ok = true;
                }
            bad += !ok;
        }
    REQUIRE(total > 0);
    CHECK(double(bad) / total < 0.02);
}

TEST_CASE("rendering determinism across runs and thread counts") {
    CadModel m = generate_random_model(8, 2);
    Camera cam = look_at_camera({2.2, 0.3, 1.5}, {0, 0, 0}, 96, 96, 40.0);
    auto a = render_surface_labels(m, cam, 1);
    auto b = render_surface_labels(m, cam, 2);
    CHECK(a.instance.data == b.instance.data);
    CHECK(a.cls.data == b.cls.data);
    auto ca = render_curve_labels(m, cam, 5.0, 1);
    auto cb = render_curve_labels(m, cam, 5.0, 2);
    CHECK(ca.instance.data == cb.instance.data);
    CHECK(ca.cls.data == cb.cls.data);
}

TEST_CASE("noise: zero spec is identity") {
    CadModel m = generate_random_model(2, 2);
    Camera cam = top_down_camera(96);
    LabelImageSet set;
    ViewLabels v;
    v.view_id = 0;
    v.camera = cam;
    auto s = render_surface_labels(m, cam);
    auto c = render_curve_labels(m, cam, 5.0);
    v.surface_instance = s.instance;
    v.surface_cls = s.cls;
    v.curve_instance = c.instance;
    v.curve_cls = c.cls;
    set.views.push_back(v);

    NoiseSpec spec;  // all off
    auto out = inject_label_noise(set, spec);
    CHECK(out.views[0].surface_instance.data == set.views[0].surface_instance.data);
    CHECK(out.views[0].surface_cls.data == set.views[0].surface_cls.data);
    CHECK(out.views[0].curve_instance.data == set.views[0].curve_instance.data);
    CHECK(out.views[0].curve_cls.data == set.views[0].curve_cls.data);

    NoiseSpec bad;
    bad.flip_prob = -0.1;
    CHECK_THROWS_AS(inject_label_noise(set, bad), ValidationError);
}

TEST_CASE("noise: permutation preserves per-view pixel count multiset") {
    CadModel m = generate_random_model(21, 4);
    LabelImageSet set;
    auto cams = fibonacci_views(4, 2.8, 128, 128);
    for (size_t i = 0; i < cams.size(); ++i) {
        ViewLabels v;
        v.view_id = static_cast<int>(i);
        v.camera = cams[i];
        auto s = render_surface_labels(m, cams[i]);
        auto c = render_curve_labels(m, cams[i], 5.0);
        v.surface_instance = s.instance;
        v.surface_cls = s.cls;
        v.curve_instance = c.instance;
        v.curve_cls = c.cls;
        set.views.push_back(std::move(v));
    }
    NoiseSpec spec;
    spec.permute_instances = true;
    spec.seed = 77;
    auto out = inject_label_noise(set, spec);
    out.validate();
    bool any_changed = false;
    for (size_t vi = 0; vi < set.views.size(); ++vi) {
        std::map<int, int> before, after;
        for (uint8_t p : set.views[vi].surface_instance.data)
            if (p) before[p]++;
        for (uint8_t p : out.views[vi].surface_instance.data)
            if (p) after[p]++;
        std::multiset<int> b, a;
        for (auto& kv : before) b.insert(kv.second);
        for (auto& kv : after) a.insert(kv.second);
        CHECK(b == a);
        any_changed = any_changed || before != after;
    }
    CHECK(any_changed);
}

TEST_CASE("noise: flip fraction matches the requested probability") {
    CadModel m;
    m.cylinders.push_back(make_box(0.6, 0.6, 1.2));
    Camera cam = top_down_camera(400);
    LabelImageSet set;
    ViewLabels v;
    v.view_id = 0;
    v.camera = cam;
    auto s = render_surface_labels(m, cam);
    v.surface_instance = s.instance;
    v.surface_cls = s.cls;
    v.curve_instance = LabelImage(400, 400, 0);
    v.curve_cls = LabelImage(400, 400, 0);
    set.views.push_back(v);

    NoiseSpec spec;
    spec.flip_prob = 0.05;
    spec.seed = 12345;
    auto out = inject_label_noise(set, spec);
    int fg = 0, changed = 0;
    for (size_t i = 0; i < s.cls.data.size(); ++i) {
        if (!s.cls.data[i]) {
            CHECK(out.views[0].surface_cls.data[i] == 0);  // bg never foregrounded
            continue;
        }
        ++fg;
        changed += out.views[0].surface_cls.data[i] != s.cls.data[i];
    }
    REQUIRE(fg > 5000);
    double frac = double(changed) / fg;
    CHECK(frac > 0.04);
    CHECK(frac < 0.06);
}
