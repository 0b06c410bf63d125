#pragma once

#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "cylrev/geom.hpp"

namespace cylrev {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parametric segments in the normalized sketch frame. A loop is a cyclic
// chain of segments; each segment's end point must coincide with the next
// segment's start point.

struct LineSeg {
    Vec2 p0, p1;
};

// Circular arc from start_angle sweeping by `sweep` radians (signed, CCW>0).
struct ArcSeg {
    Vec2 center;
    double radius = 0.0;
    double start_angle = 0.0;
    double sweep = 0.0;

    Vec2 point_at(double t) const {  // t in [0,1]
        double a = start_angle + sweep * t;
        return center + Vec2{std::cos(a), std::sin(a)} * radius;
    }
};

struct BezierSeg {
    Vec2 p0, p1, p2, p3;  // cubic control points

    Vec2 point_at(double t) const {
        double u = 1.0 - t;
        return p0 * (u * u * u) + p1 * (3 * u * u * t) + p2 * (3 * u * t * t) + p3 * (t * t * t);
    }
    Vec2 deriv_at(double t) const {
        double u = 1.0 - t;
        return (p1 - p0) * (3 * u * u) + (p2 - p1) * (6 * u * t) + (p3 - p2) * (3 * t * t);
    }
};

using SketchSegment = std::variant<LineSeg, ArcSeg, BezierSeg>;

Vec2 segment_start(const SketchSegment& s);
Vec2 segment_end(const SketchSegment& s);
double segment_length(const SketchSegment& s);

struct SketchLoop {
    std::vector<SketchSegment> segments;
};

// A set of closed, non-crossing loops in a normalized frame. Immutable after
// construction; the constructor validates and caches flattened polylines for
// point-in-region tests and sampling.
class SketchProfile {
  public:
    SketchProfile() = default;
    explicit SketchProfile(std::vector<SketchLoop> loops, bool validate = true);

    const std::vector<SketchLoop>& loops() const { return loops_; }
    bool empty() const { return loops_.empty(); }

    // Signed distance: negative inside, positive outside, zero on boundary.
    // Exact for lines/arcs; Beziers within 1e-6 via sampled Newton refinement.
    double sdf(const Vec2& p) const;

    bool contains(const Vec2& p) const;  // even-odd rule

    double boundary_length() const { return total_length_; }
    double area() const;  // enclosed area (holes subtracted)

    // Arc-length-uniform boundary point at parameter u in [0,1) over the
    // whole boundary, with the outward-in-plane normal of the region.
    Vec2 boundary_point(double u, Vec2* outward_normal = nullptr) const;

    // Flattened polyline per loop (closed: last point != first; wraps).
    const std::vector<std::vector<Vec2>>& flattened() const { return flat_; }

    double max_radius() const { return max_radius_; }

    static SketchProfile unit_circle();
    static SketchProfile rectangle(double half_w, double half_h);
    static SketchProfile regular_polygon(int n, double radius);

  private:
    std::vector<SketchLoop> loops_;
    std::vector<std::vector<Vec2>> flat_;       // per loop
    std::vector<Aabb2> seg_bbox_;               // conservative, per segment (loop-major)
    std::vector<std::vector<Vec2>> seg_poly_;   // flattened, Beziers only
    std::vector<double> seg_len_;               // per segment, loop-major
    std::vector<double> cum_len_;               // cumulative, aligned with seg order
    double total_length_ = 0.0;
    double max_radius_ = 0.0;

    void build_cache();
    void validate() const;
};

// Segment-level exact distances (Beziers via Newton-refined sampling).
double distance_to_segment(const SketchSegment& s, const Vec2& p);

}  // namespace cylrev
