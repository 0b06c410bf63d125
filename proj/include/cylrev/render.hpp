#pragma once

#include "cylrev/camera.hpp"
#include "cylrev/image.hpp"
#include "cylrev/model.hpp"

namespace cylrev {

struct SurfaceRender {
    LabelImage instance;  // 0 background, 1..K
    LabelImage cls;       // 0 background, 1 start, 2 end, 3 barrel
    DepthImage depth;     // ray parameter t of the hit; +inf on miss
};

struct CurveRender {
    LabelImage instance;  // 0 background, 1..K
    LabelImage cls;       // 0 background, 1 start, 2 end
};

// First CSG boundary hit along each pixel ray via sphere marching on the
// per-cylinder distance bound, bisection-refined to 1e-5. threads=0 means
// use all available; results are identical for any thread count.
SurfaceRender render_surface_labels(const CadModel& model, const Camera& cam, int threads = 0);

// Projected start/end base loops, occlusion-tested against the solid,
// rasterized with the given stroke width (pixels).
CurveRender render_curve_labels(const CadModel& model, const Camera& cam, double width_px = 5.0,
                                int threads = 0);

LabelImage render_silhouette(const CadModel& model, const Camera& cam, int threads = 0);

// Single-ray march used by the renderers; exposed for tests and for the
// occlusion checks. Returns hit parameter t or +inf.
double march_first_hit(const CadModel& model, const Ray& ray);

}  // namespace cylrev
