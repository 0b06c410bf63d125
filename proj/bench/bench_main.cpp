// Timing comparison of the serial reference (threads=1) against the OpenMP
// kernels for the hot paths: label rendering, field optimization, point
// extraction, chamfer queries, and the implicit sketch grid.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "cylrev/extract.hpp"
#include "cylrev/field_train.hpp"
#include "cylrev/generate.hpp"
#include "cylrev/nn_index.hpp"
#include "cylrev/render.hpp"
#include "cylrev/rng.hpp"
#include "cylrev/sketch_fit.hpp"

using namespace cylrev;
using Clock = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps = 3) {
    double best = 1e30;
    for (int i = 0; i < reps; ++i) {
        auto t0 = Clock::now();
        fn();
        auto t1 = Clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

void report(const char* name, double serial_ms, double parallel_ms, int threads) {
    std::printf("%-28s %10.1f ms %10.1f ms   x%.2f (%d threads)\n", name, serial_ms,
                parallel_ms, serial_ms / parallel_ms, threads);
}

}  // namespace

int main() {
    const int threads = omp_get_max_threads();
    std::printf("kernel                        serial        openmp     speedup\n");

    CadModel model = generate_random_model(17, 3);
    Camera cam = look_at_camera({2.0, 1.4, 1.6}, {0, 0, 0}, 200, 200, 40.0);

    report("render_surface_labels 200^2",
           time_ms([&] { render_surface_labels(model, cam, 1); }),
           time_ms([&] { render_surface_labels(model, cam, threads); }), threads);

    report("render_curve_labels 200^2",
           time_ms([&] { render_curve_labels(model, cam, 5.0, 1); }),
           time_ms([&] { render_curve_labels(model, cam, 5.0, threads); }), threads);

    // Field training: a short but representative schedule.
    LabelImageSet set;
    auto cams = fibonacci_views(10, 2.8, 128, 128);
    for (size_t i = 0; i < cams.size(); ++i) {
        ViewLabels v;
        v.view_id = static_cast<int>(i);
        v.camera = cams[i];
        auto s = render_surface_labels(model, cams[i], threads);
        auto c = render_curve_labels(model, cams[i], 5.0, threads);
        v.surface_instance = s.instance;
        v.surface_cls = s.cls;
        v.curve_instance = c.instance;
        v.curve_cls = c.cls;
        set.views.push_back(std::move(v));
    }
    TrainConfig tc;
    tc.iterations = 50;
    tc.ray_batch = 4096;
    tc.samples_per_ray = 96;
    tc.field_resolution = 48;
    report("optimize_field 50 iters",
           time_ms(
               [&] {
                   TrainConfig c = tc;
                   c.threads = 1;
                   optimize_field_single(set, CloudSource::Surface, c);
               },
               1),
           time_ms(
               [&] {
                   TrainConfig c = tc;
                   c.threads = threads;
                   optimize_field_single(set, CloudSource::Surface, c);
               },
               1),
           threads);

    TrainConfig fc = tc;
    fc.threads = threads;
    VoxelField field = optimize_field_single(set, CloudSource::Surface, fc);
    report("extract_points 128^3",
           time_ms([&] { extract_points(field, 0.95, 128, nullptr, 1); }),
           time_ms([&] { extract_points(field, 0.95, 128, nullptr, threads); }), threads);

    Rng rng(5);
    std::vector<Vec3> a, b;
    for (int i = 0; i < 8192; ++i) {
        a.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
        b.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    }
    report("chamfer 8192x8192", time_ms([&] { chamfer(a, b, true, 1); }),
           time_ms([&] { chamfer(a, b, true, threads); }), threads);

    std::vector<Vec2> circle;
    for (int i = 0; i < 512; ++i) {
        double ang = 2 * kPi * i / 512;
        circle.push_back({std::cos(ang), std::sin(ang)});
    }
    auto oriented = estimate_normals_2d(circle);
    report("fit_implicit_sketch 128^2",
           time_ms([&] { fit_implicit_sketch(oriented, 128, 1); }),
           time_ms([&] { fit_implicit_sketch(oriented, 128, threads); }), threads);

    return 0;
}
