#include "cylrev/model.hpp"

#include <cmath>

namespace cylrev {

void ExtrusionCylinder::to_local(const Vec3& x, Vec2& uv, double& w) const {
    Mat3 f = frame();
    Vec3 rel = x - center;
    Vec3 u = f.col(0), v = f.col(1);
    uv = Vec2{rel.dot(u), rel.dot(v)} / scale;
    w = rel.dot(axis);
}

Vec3 ExtrusionCylinder::from_local(const Vec2& uv, double w) const {
    Mat3 f = frame();
    return center + f.col(0) * (uv.x * scale) + f.col(1) * (uv.y * scale) + axis * w;
}

double ExtrusionCylinder::sdf(const Vec3& x) const {
    Vec2 uv;
    double w;
    to_local(x, uv, w);
    double d2 = sketch.sdf(uv) * scale;       // in-plane distance, world units
    double dz = std::abs(w) - 0.5 * height;   // axial slab distance
    double inside = std::min(std::max(d2, dz), 0.0);
    double ox = std::max(d2, 0.0), oz = std::max(dz, 0.0);
    return inside + std::sqrt(ox * ox + oz * oz);
}

Aabb ExtrusionCylinder::bounds() const {
    // Sketch fits in the unit disk, so the solid fits in a capped cylinder of
    // radius `scale` about the axis.
    Aabb b;
    double r = scale * std::max(sketch.max_radius(), 1e-9);
    for (int i = 0; i < 3; ++i) {
        double ni = axis[i];
        double half = 0.5 * height * std::abs(ni) + r * std::sqrt(std::max(0.0, 1.0 - ni * ni));
        double ci = center[i];
        Vec3 lo = b.lo, hi = b.hi;
        (i == 0 ? lo.x : i == 1 ? lo.y : lo.z) = ci - half;
        (i == 0 ? hi.x : i == 1 ? hi.y : hi.z) = ci + half;
        b.lo = lo;
        b.hi = hi;
    }
    return b;
}

void ExtrusionCylinder::validate() const {
    if (std::abs(axis.norm() - 1.0) > 1e-9) throw ValidationError("extrusion axis is not unit");
    if (!(height > 0)) throw ValidationError("extrusion height must be positive");
    if (!(scale > 0)) throw ValidationError("sketch scale must be positive");
    if (sketch.empty()) throw ValidationError("extrusion has an empty sketch");
}

void CadModel::validate(bool check_nonempty) const {
    if (cylinders.empty() || static_cast<int>(cylinders.size()) > kMaxInstances)
        throw ValidationError("model must have between 1 and 8 cylinders");
    if (cylinders.front().op != BoolOp::Union)
        throw ValidationError("first boolean operation must be union");
    for (const auto& c : cylinders) c.validate();
    Aabb b = bounds();
    if (b.lo.x < -1.0 - 1e-6 || b.lo.y < -1.0 - 1e-6 || b.lo.z < -1.0 - 1e-6 ||
        b.hi.x > 1.0 + 1e-6 || b.hi.y > 1.0 + 1e-6 || b.hi.z > 1.0 + 1e-6)
        throw ValidationError("model exceeds the [-1,1]^3 bounding cube");
    if (check_nonempty) {
        // Coarse occupancy probe.
        bool any = false;
        const int n = 24;
        for (int i = 0; i < n && !any; ++i)
            for (int j = 0; j < n && !any; ++j)
                for (int k = 0; k < n && !any; ++k) {
                    Vec3 p{-1.0 + 2.0 * (i + 0.5) / n, -1.0 + 2.0 * (j + 0.5) / n,
                           -1.0 + 2.0 * (k + 0.5) / n};
                    any = model_contains(*this, p);
                }
        if (!any) throw ValidationError("model solid is empty");
    }
}

Aabb CadModel::bounds() const {
    Aabb b;
    for (const auto& c : cylinders)
        if (c.op == BoolOp::Union) b.expand(c.bounds());
    return b;
}

bool model_contains(const CadModel& model, const Vec3& x) {
    bool occ = false;
    for (const auto& c : model.cylinders) {
        bool in = c.contains(x);
        if (c.op == BoolOp::Union)
            occ = occ || in;
        else
            occ = occ && !in;
    }
    return occ;
}

double model_pseudo_sdf(const CadModel& model, const Vec3& x) {
    double d = std::numeric_limits<double>::max();
    for (const auto& c : model.cylinders) {
        double s = c.sdf(x);
        d = (c.op == BoolOp::Union) ? std::min(d, s) : std::max(d, -s);
    }
    return d;
}

double model_step_bound(const CadModel& model, const Vec3& x) {
    double d = std::numeric_limits<double>::max();
    for (const auto& c : model.cylinders) d = std::min(d, std::abs(c.sdf(x)));
    return d;
}

PreparedModel::PreparedModel(const CadModel& model) : model_(&model) {
    for (const auto& c : model.cylinders) {
        frames_.push_back(c.frame());
        radius_.push_back(c.scale * std::max(c.sketch.max_radius(), 1e-9));
        box_.expand(c.bounds());  // difference cylinders included: rays may need to
                                  // march carved regions near the union boundary
    }
}

PreparedModel::Probe PreparedModel::probe(const Vec3& x) const {
    bool occ = false;
    double bound = std::numeric_limits<double>::max();
    const auto& cyls = model_->cylinders;
    for (size_t i = 0; i < cyls.size(); ++i) {
        const auto& c = cyls[i];
        const Mat3& f = frames_[i];
        Vec3 rel = x - c.center;
        double u = rel.dot(f.col(0)), v = rel.dot(f.col(1)), w = rel.dot(c.axis);
        double dr = std::sqrt(u * u + v * v) - radius_[i];
        double dz = std::abs(w) - 0.5 * c.height;
        double ox = std::max(dr, 0.0), oz = std::max(dz, 0.0);
        double outer = std::sqrt(ox * ox + oz * oz);  // distance to circumscribed cylinder
        bool inside_i = false;
        if (outer > 1e-12) {
            bound = std::min(bound, outer);
        } else {
            double d2 = c.sketch.sdf(Vec2{u / c.scale, v / c.scale}) * c.scale;
            double in = std::min(std::max(d2, dz), 0.0);
            double px = std::max(d2, 0.0), pz = std::max(dz, 0.0);
            double sd = in + std::sqrt(px * px + pz * pz);
            bound = std::min(bound, std::abs(sd));
            inside_i = sd <= 0.0;
        }
        occ = (c.op == BoolOp::Union) ? (occ || inside_i) : (occ && !inside_i);
    }
    return {occ, bound};
}

SurfacePointInfo classify_surface_point(const CadModel& model, const Vec3& x, double eps) {
    const int n = static_cast<int>(model.cylinders.size());
    SurfacePointInfo out;
    for (int i = 0; i < n; ++i) {
        const auto& ci = model.cylinders[i];
        double sd = ci.sdf(x);
        if (std::abs(sd) > eps) continue;
        // Carved faces of a difference cylinder only exist where the partial
        // solid built so far had material.
        if (ci.op == BoolOp::Difference) {
            bool before = false;
            for (int j = 0; j < i; ++j) {
                const auto& cj = model.cylinders[j];
                double s = cj.sdf(x);
                if (cj.op == BoolOp::Union)
                    before = before || (s <= eps);
                else
                    before = before && !(s < -eps);
            }
            if (!before) continue;
        }
        // Later cylinders swallow (union) or carve (difference) this surface
        // wherever x is strictly interior to them.
        bool survives = true;
        for (int j = i + 1; j < n; ++j) {
            if (model.cylinders[j].sdf(x) < -eps) {
                survives = false;
                break;
            }
        }
        if (!survives) continue;
        // A union cylinder's face buried strictly inside earlier material is
        // not a surface either.
        if (ci.op == BoolOp::Union && i > 0) {
            double dbefore = std::numeric_limits<double>::max();
            for (int j = 0; j < i; ++j) {
                const auto& cj = model.cylinders[j];
                double s = cj.sdf(x);
                dbefore = (cj.op == BoolOp::Union) ? std::min(dbefore, s) : std::max(dbefore, -s);
            }
            if (dbefore < -eps) continue;
        }
        Vec2 uv;
        double w;
        ci.to_local(x, uv, w);
        SurfaceClass cls;
        if (std::abs(w + 0.5 * ci.height) <= eps)
            cls = SurfaceClass::Start;
        else if (std::abs(w - 0.5 * ci.height) <= eps)
            cls = SurfaceClass::End;
        else
            cls = SurfaceClass::Barrel;
        out.instance = i;  // latest survivor wins
        out.cls = cls;
    }
    return out;
}

}  // namespace cylrev
