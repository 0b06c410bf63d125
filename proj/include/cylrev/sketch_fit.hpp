#pragma once

#include <vector>

#include "cylrev/sketch.hpp"

namespace cylrev {

struct SketchFitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OrientedPoint2D {
    Vec2 position;
    Vec2 normal;  // unit, oriented outward from the enclosed region
};

// Winding-field normal estimation: solves the Gauss-integral system with the
// width-regularized 2D kernel for vector coefficients, normalizes them into
// normals, and orients them outward. Falls back to local-PCA normals when the
// system is unusable.
std::vector<OrientedPoint2D> estimate_normals_2d(const std::vector<Vec2>& points);

// Implicit sketch sampled on a grid over [-extent, extent]^2.
struct SketchGrid {
    int res = 128;
    double extent = 1.2;
    std::vector<double> values;  // res*res, index iy*res + ix

    double at(int ix, int iy) const { return values[size_t(iy) * res + ix]; }
    double& at(int ix, int iy) { return values[size_t(iy) * res + ix]; }
    double spacing() const { return 2.0 * extent / (res - 1); }
    Vec2 node(int ix, int iy) const {
        return {-extent + ix * spacing(), -extent + iy * spacing()};
    }
};

// Indicator-style implicit from oriented boundary samples, shifted so the
// median value at the inputs is zero: negative inside, positive outside.
SketchGrid fit_implicit_sketch(const std::vector<OrientedPoint2D>& oriented, int grid_res,
                               int threads = 1);

struct SketchLoops {
    std::vector<std::vector<Vec2>> polylines;  // closed; material on the left
    std::vector<SketchLoop> splines;           // closed cubic Bezier chains
};

// Marching squares at iso 0 with linear interpolation, loop chaining, and a
// least-squares closed cubic B-spline fit per loop. Loops under 6 vertices
// are discarded; a grid without zero crossings raises SketchFitError.
SketchLoops extract_sketch_loops(const SketchGrid& grid);

// Least-squares closed cubic B-spline; returns the Bezier-converted loop and
// the maximum parametric fitting residual.
SketchLoop fit_closed_bspline(const std::vector<Vec2>& points, int n_ctrl, double* max_residual);

}  // namespace cylrev
