#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cylrev/extract.hpp"
#include "cylrev/field_train.hpp"
#include "cylrev/generate.hpp"
#include "cylrev/nn_index.hpp"
#include "cylrev/render.hpp"
#include "cylrev/rng.hpp"
#include "cylrev/sample.hpp"
#include "cylrev/sketch_fit.hpp"

// The OpenMP kernels must agree with their serial (threads=1) reference:
// bit-identical where the loops are pure per-element, within float tolerance
// where gradient reductions reorder sums.

using namespace cylrev;

namespace {

LabelImageSet render_set(const CadModel& m, int n_views, int res, int threads) {
    LabelImageSet set;
    auto cams = fibonacci_views(n_views, 2.8, res, res);
    for (size_t i = 0; i < cams.size(); ++i) {
        ViewLabels v;
        v.view_id = static_cast<int>(i);
        v.camera = cams[i];
        auto s = render_surface_labels(m, cams[i], threads);
        auto c = render_curve_labels(m, cams[i], 5.0, threads);
        v.surface_instance = s.instance;
        v.surface_cls = s.cls;
        v.curve_instance = c.instance;
        v.curve_cls = c.cls;
        set.views.push_back(std::move(v));
    }
    return set;
}

}  // namespace

TEST_CASE("render kernels: parallel output equals the serial reference bit for bit") {
    CadModel m = generate_random_model(41, 3);
    Camera cam = look_at_camera({1.8, 1.2, 2.0}, {0, 0, 0}, 128, 128, 40.0);
    auto serial = render_surface_labels(m, cam, 1);
    auto parallel = render_surface_labels(m, cam, 2);
    CHECK(serial.instance.data == parallel.instance.data);
    CHECK(serial.cls.data == parallel.cls.data);
    CHECK(serial.depth.data == parallel.depth.data);

    auto cs = render_curve_labels(m, cam, 5.0, 1);
    auto cp = render_curve_labels(m, cam, 5.0, 2);
    CHECK(cs.instance.data == cp.instance.data);
    CHECK(cs.cls.data == cp.cls.data);

    CHECK(render_silhouette(m, cam, 1).data == render_silhouette(m, cam, 2).data);
}

TEST_CASE("extraction: parallel equals serial bit for bit") {
    // A trained-ish field with structure.
    CadModel m = generate_random_model(6, 1);
    LabelImageSet set = render_set(m, 6, 64, 2);
    TrainConfig tc;
    tc.iterations = 60;
    tc.ray_batch = 1024;
    tc.samples_per_ray = 48;
    tc.field_resolution = 24;
    tc.threads = 2;
    VoxelField f = optimize_field_single(set, CloudSource::Surface, tc);

    auto a = extract_points(f, 0.9, 48, nullptr, 1);
    auto b = extract_points(f, 0.9, 48, nullptr, 2);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a.points[i].x == b.points[i].x);
        CHECK(a.instance[i] == b.instance[i]);
        CHECK(a.cls[i] == b.cls[i]);
    }
}

TEST_CASE("chamfer: parallel equals serial") {
    Rng rng(3);
    std::vector<Vec3> a, b;
    for (int i = 0; i < 4000; ++i) {
        a.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        b.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    }
    // Sum reduction order varies; values must agree to near machine precision.
    CHECK(chamfer(a, b, true, 1) == doctest::Approx(chamfer(a, b, true, 2)).epsilon(1e-12));
}

TEST_CASE("field training: two-thread run matches the serial reference closely") {
    CadModel m = generate_random_model(9, 2);
    LabelImageSet set = render_set(m, 6, 64, 2);
    TrainConfig tc;
    tc.iterations = 80;
    tc.ray_batch = 1024;
    tc.samples_per_ray = 48;
    tc.field_resolution = 16;
    tc.seed = 4;

    tc.threads = 1;
    TrainDiagnostics d1;
    VoxelField f1 = optimize_field_single(set, CloudSource::Surface, tc, &d1);
    tc.threads = 2;
    TrainDiagnostics d2;
    VoxelField f2 = optimize_field_single(set, CloudSource::Surface, tc, &d2);

    // Same ray batches, same math; only the reduction order differs. After 80
    // Adam steps the grids stay close and the loss curves nearly coincide.
    REQUIRE(f1.density.size() == f2.density.size());
    double max_diff = 0;
    for (size_t i = 0; i < f1.density.size(); ++i)
        max_diff = std::max(max_diff, double(std::abs(f1.density[i] - f2.density[i])));
    CHECK(max_diff < 5e-2);
    for (size_t i = 0; i < d1.loss_history.size(); ++i)
        CHECK(d1.loss_history[i] ==
              doctest::Approx(d2.loss_history[i]).epsilon(1e-3).scale(1.0));

    // And the serial run is bit-reproducible.
    tc.threads = 1;
    VoxelField f3 = optimize_field_single(set, CloudSource::Surface, tc);
    CHECK(f1.density == f3.density);
    CHECK(f1.inst_logits == f3.inst_logits);
}

TEST_CASE("implicit sketch grid: parallel equals serial bit for bit") {
    std::vector<Vec2> circle;
    for (int i = 0; i < 160; ++i) {
        double a = 2 * kPi * i / 160;
        circle.push_back({std::cos(a), std::sin(a)});
    }
    auto oriented = estimate_normals_2d(circle);
    SketchGrid g1 = fit_implicit_sketch(oriented, 96, 1);
    SketchGrid g2 = fit_implicit_sketch(oriented, 96, 2);
    CHECK(g1.values == g2.values);
}
