#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cylrev/geom.hpp"
#include "cylrev/sketch.hpp"

namespace cylrev {

constexpr int kMaxInstances = 8;

enum class BoolOp : uint8_t { Union = 0, Difference = 1 };

enum class SurfaceClass : uint8_t { None = 0, Start = 1, End = 2, Barrel = 3 };

// Solid formed by sweeping a normalized sketch (scaled by `scale`) along
// `axis` over height `height`, centered at `center`. The start plane passes
// through center - (height/2) axis, the end plane through center + (height/2) axis.
struct ExtrusionCylinder {
    Vec3 axis{0, 0, 1};  // unit
    Vec3 center{0, 0, 0};
    double height = 1.0;
    double scale = 1.0;
    SketchProfile sketch;
    BoolOp op = BoolOp::Union;

    // Cached sketch frame: minimal rotation taking +z to axis.
    Mat3 frame() const { return rotation_z_to(axis); }

    // World point -> (2D sketch coords in normalized units, axial offset).
    void to_local(const Vec3& x, Vec2& uv, double& w) const;
    Vec3 from_local(const Vec2& uv, double w) const;  // uv normalized units

    // Exact signed distance to this cylinder's boundary (sketch sdf exact).
    double sdf(const Vec3& x) const;
    bool contains(const Vec3& x) const { return sdf(x) <= 0.0; }

    Aabb bounds() const;
    void validate() const;
};

struct CadModel {
    std::vector<ExtrusionCylinder> cylinders;

    void validate(bool check_nonempty = true) const;
    Aabb bounds() const;
};

// CSG left fold: occ <- occ U cyl (union) or occ \ cyl (difference).
bool model_contains(const CadModel& model, const Vec3& x);

// Sign-correct fold of per-cylinder signed distances. |result| is not a
// distance, but the sign matches model_contains away from coincident faces.
double model_pseudo_sdf(const CadModel& model, const Vec3& x);

// Lower bound on the distance from x to any cylinder surface; a safe sphere-
// marching step because the CSG boundary is a subset of those surfaces.
double model_step_bound(const CadModel& model, const Vec3& x);

// Default classification tolerance: 1e-4 of the [-1,1]^3 diagonal.
inline double default_class_eps() { return 1e-4 * 2.0 * std::sqrt(3.0); }

// Acceleration view for ray marching and dense queries: caches sketch frames
// and per-cylinder circumscribed cylinders. Must not outlive the model.
class PreparedModel {
  public:
    explicit PreparedModel(const CadModel& model);

    const CadModel& model() const { return *model_; }
    const Aabb& bounds() const { return box_; }

    struct Probe {
        bool inside = false;
        double bound = 0.0;  // lower bound on distance to any cylinder surface
    };
    Probe probe(const Vec3& x) const;
    bool contains(const Vec3& x) const { return probe(x).inside; }

  private:
    const CadModel* model_;
    std::vector<Mat3> frames_;
    std::vector<double> radius_;  // circumscribed cylinder radius, world units
    Aabb box_;
};

struct SurfacePointInfo {
    int instance = -1;  // 0-based cylinder index, -1 when off-boundary
    SurfaceClass cls = SurfaceClass::None;
};

// Ownership at coincident faces goes to the latest cylinder in fold order
// whose surface contains x and survives the remaining CSG operations.
SurfacePointInfo classify_surface_point(const CadModel& model, const Vec3& x,
                                        double eps = default_class_eps());

}  // namespace cylrev
