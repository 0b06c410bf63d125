#include "cylrev/sketch.hpp"

#include <cmath>
#include <functional>

namespace cylrev {

namespace {

constexpr double kClosureTol = 1e-9;
constexpr double kBezierFlatTol = 1e-6;

double wrap_angle(double a) {
    while (a < 0) a += 2 * kPi;
    while (a >= 2 * kPi) a -= 2 * kPi;
    return a;
}

void flatten_bezier(const BezierSeg& b, std::vector<Vec2>& out) {
    // Adaptive: split until the control polygon deviates < tol from the chord.
    out.push_back(b.p0);
    const auto flat_enough = [](const BezierSeg& s) {
        Vec2 d = s.p3 - s.p0;
        double l2 = std::max(d.norm2(), 1e-30);
        double d1 = std::abs((s.p1 - s.p0).cross(d)) / std::sqrt(l2);
        double d2 = std::abs((s.p2 - s.p0).cross(d)) / std::sqrt(l2);
        return std::max(d1, d2) < kBezierFlatTol;
    };
    const auto split = [](const BezierSeg& s, BezierSeg& a, BezierSeg& c) {
        Vec2 p01 = (s.p0 + s.p1) * 0.5, p12 = (s.p1 + s.p2) * 0.5, p23 = (s.p2 + s.p3) * 0.5;
        Vec2 p012 = (p01 + p12) * 0.5, p123 = (p12 + p23) * 0.5;
        Vec2 mid = (p012 + p123) * 0.5;
        a = {s.p0, p01, p012, mid};
        c = {mid, p123, p23, s.p3};
    };
    // Depth cap keeps degenerate inputs from recursing forever.
    const std::function<void(const BezierSeg&, int)> rec = [&](const BezierSeg& s, int depth) {
        if (depth >= 24 || flat_enough(s)) {
            out.push_back(s.p3);
            return;
        }
        BezierSeg a, c;
        split(s, a, c);
        rec(a, depth + 1);
        rec(c, depth + 1);
    };
    rec(b, 0);
}

void flatten_arc(const ArcSeg& a, std::vector<Vec2>& out) {
    // Chord sagitta r(1-cos(h/2)) <= tol.
    double tol = 1e-6;
    double h = 2 * std::acos(clampd(1.0 - tol / std::max(a.radius, 1e-12), -1.0, 1.0));
    int n = std::max(2, static_cast<int>(std::ceil(std::abs(a.sweep) / std::max(h, 1e-4))));
    n = std::min(n, 4096);
    for (int i = 0; i <= n; ++i) out.push_back(a.point_at(static_cast<double>(i) / n));
}

}  // namespace

Vec2 segment_start(const SketchSegment& s) {
    return std::visit(
        [](const auto& v) -> Vec2 {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LineSeg>) return v.p0;
            else if constexpr (std::is_same_v<T, ArcSeg>) return v.point_at(0.0);
            else return v.p0;
        },
        s);
}

Vec2 segment_end(const SketchSegment& s) {
    return std::visit(
        [](const auto& v) -> Vec2 {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LineSeg>) return v.p1;
            else if constexpr (std::is_same_v<T, ArcSeg>) return v.point_at(1.0);
            else return v.p3;
        },
        s);
}

double segment_length(const SketchSegment& s) {
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LineSeg>) {
                return (v.p1 - v.p0).norm();
            } else if constexpr (std::is_same_v<T, ArcSeg>) {
                return std::abs(v.sweep) * v.radius;
            } else {
                // Gauss-Legendre 16-point on |B'(t)|.
                static const double xs[8] = {0.0950125098376374, 0.2816035507792589,
                                             0.4580167776572274, 0.6178762444026438,
                                             0.7554044083550030, 0.8656312023878318,
                                             0.9445750230732326, 0.9894009349916499};
                static const double ws[8] = {0.1894506104550685, 0.1826034150449236,
                                             0.1691565193950025, 0.1495959888165767,
                                             0.1246289712555339, 0.0951585116824928,
                                             0.0622535239386479, 0.0271524594117541};
                double sum = 0;
                for (int i = 0; i < 8; ++i) {
                    sum += ws[i] * (v.deriv_at(0.5 * (1 + xs[i])).norm() +
                                    v.deriv_at(0.5 * (1 - xs[i])).norm());
                }
                return 0.5 * sum;
            }
        },
        s);
}

double distance_to_segment(const SketchSegment& s, const Vec2& p) {
    return std::visit(
        [&](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LineSeg>) {
                Vec2 d = v.p1 - v.p0;
                double l2 = d.norm2();
                if (l2 < 1e-30) return (p - v.p0).norm();
                double t = clampd((p - v.p0).dot(d) / l2, 0.0, 1.0);
                return (p - (v.p0 + d * t)).norm();
            } else if constexpr (std::is_same_v<T, ArcSeg>) {
                Vec2 rel = p - v.center;
                double a = std::atan2(rel.y, rel.x);
                // Is the angle within the swept range?
                double from = v.sweep >= 0 ? v.start_angle : v.start_angle + v.sweep;
                double span = std::abs(v.sweep);
                double rel_a = wrap_angle(a - from);
                if (rel_a <= span) {
                    return std::abs(rel.norm() - v.radius);
                }
                double d0 = (p - v.point_at(0.0)).norm();
                double d1 = (p - v.point_at(1.0)).norm();
                return std::min(d0, d1);
            } else {
                // Coarse sampling then Newton on g(t) = <B(t)-p, B'(t)>.
                double best_t = 0.0, best_d2 = (v.p0 - p).norm2();
                constexpr int kSamples = 24;
                for (int i = 1; i <= kSamples; ++i) {
                    double t = static_cast<double>(i) / kSamples;
                    double d2 = (v.point_at(t) - p).norm2();
                    if (d2 < best_d2) {
                        best_d2 = d2;
                        best_t = t;
                    }
                }
                double t = best_t;
                for (int it = 0; it < 12; ++it) {
                    Vec2 r = v.point_at(t) - p;
                    Vec2 d1 = v.deriv_at(t);
                    double u = 1.0 - t;
                    Vec2 d2v = (v.p2 - v.p1 * 2.0 + v.p0) * (6 * u) +
                               (v.p3 - v.p2 * 2.0 + v.p1) * (6 * t);
                    double g = r.dot(d1);
                    double gp = d1.dot(d1) + r.dot(d2v);
                    if (std::abs(gp) < 1e-18) break;
                    double nt = clampd(t - g / gp, 0.0, 1.0);
                    if (std::abs(nt - t) < 1e-14) { t = nt; break; }
                    t = nt;
                }
                double d = std::min(std::sqrt(best_d2), (v.point_at(t) - p).norm());
                d = std::min(d, (v.p3 - p).norm());
                return d;
            }
        },
        s);
}

SketchProfile::SketchProfile(std::vector<SketchLoop> loops, bool do_validate)
    : loops_(std::move(loops)) {
    build_cache();
    if (do_validate) validate();
}

void SketchProfile::build_cache() {
    flat_.clear();
    seg_bbox_.clear();
    seg_poly_.clear();
    seg_len_.clear();
    cum_len_.clear();
    total_length_ = 0.0;
    max_radius_ = 0.0;
    for (const auto& loop : loops_) {
        std::vector<Vec2> poly;
        for (const auto& seg : loop.segments) {
            Aabb2 box;
            std::vector<Vec2> bez;
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, LineSeg>) {
                        poly.push_back(v.p0);
                        poly.push_back(v.p1);
                        box.expand(v.p0);
                        box.expand(v.p1);
                    } else if constexpr (std::is_same_v<T, ArcSeg>) {
                        flatten_arc(v, poly);
                        // Full circle bound; tight enough for pruning.
                        box.expand(v.center - Vec2{v.radius, v.radius});
                        box.expand(v.center + Vec2{v.radius, v.radius});
                    } else {
                        flatten_bezier(v, bez);
                        poly.insert(poly.end(), bez.begin(), bez.end());
                        box.expand(v.p0);
                        box.expand(v.p1);  // control hull bounds the curve
                        box.expand(v.p2);
                        box.expand(v.p3);
                    }
                },
                seg);
            seg_bbox_.push_back(box);
            seg_poly_.push_back(std::move(bez));
            double l = segment_length(seg);
            seg_len_.push_back(l);
            total_length_ += l;
            cum_len_.push_back(total_length_);
        }
        // Drop consecutive duplicates and the closing point.
        std::vector<Vec2> clean;
        for (const auto& p : poly) {
            if (clean.empty() || (p - clean.back()).norm2() > 1e-24) clean.push_back(p);
        }
        if (clean.size() > 1 && (clean.front() - clean.back()).norm2() < 1e-24) clean.pop_back();
        for (const auto& p : clean) max_radius_ = std::max(max_radius_, p.norm());
        flat_.push_back(std::move(clean));
    }
}

void SketchProfile::validate() const {
    size_t seg_idx = 0;
    for (const auto& loop : loops_) {
        if (loop.segments.empty()) throw ValidationError("sketch loop has no segments");
        for (size_t i = 0; i < loop.segments.size(); ++i) {
            if (seg_len_[seg_idx + i] < 1e-12)
                throw ValidationError("degenerate zero-length sketch segment");
            Vec2 e = segment_end(loop.segments[i]);
            Vec2 s = segment_start(loop.segments[(i + 1) % loop.segments.size()]);
            if ((e - s).norm() > kClosureTol) throw ValidationError("sketch loop is not closed");
        }
        seg_idx += loop.segments.size();
    }
    if (max_radius_ > 1.0 + 1e-9)
        throw ValidationError("sketch profile exceeds the unit disk");
    // Self/pairwise intersection test on the flattened polylines. Adjacent
    // edges share endpoints; skip those pairs.
    auto seg_intersect = [](Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
        Vec2 r = b - a, s2 = d - c;
        double denom = r.cross(s2);
        Vec2 cma = c - a;
        if (std::abs(denom) < 1e-18) return false;
        double t = cma.cross(s2) / denom;
        double u = cma.cross(r) / denom;
        const double eps = 1e-9;
        return t > eps && t < 1 - eps && u > eps && u < 1 - eps;
    };
    for (size_t li = 0; li < flat_.size(); ++li) {
        const auto& a = flat_[li];
        size_t n = a.size();
        for (size_t i = 0; i < n; ++i) {
            Vec2 a0 = a[i], a1 = a[(i + 1) % n];
            for (size_t j = i + 2; j < n; ++j) {
                if (i == 0 && j == n - 1) continue;
                if (seg_intersect(a0, a1, a[j], a[(j + 1) % n]))
                    throw ValidationError("sketch loop self-intersects");
            }
            for (size_t lj = li + 1; lj < flat_.size(); ++lj) {
                const auto& b = flat_[lj];
                for (size_t j = 0; j < b.size(); ++j) {
                    if (seg_intersect(a0, a1, b[j], b[(j + 1) % b.size()]))
                        throw ValidationError("sketch loops cross");
                }
            }
        }
    }
}

namespace {

int polyline_crossings(const Vec2* pts, size_t n, const Vec2& p, bool closed) {
    int crossings = 0;
    size_t m = closed ? n : n - 1;
    for (size_t i = 0; i < m; ++i) {
        const Vec2& a = pts[i];
        const Vec2& b = pts[(i + 1) % n];
        if ((a.y <= p.y) == (b.y <= p.y)) continue;
        double x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (x > p.x) ++crossings;
    }
    return crossings;
}

// Crossings of the rightward ray from p with one arc, angular span half-open
// in sweep direction so chained arcs count junctions once.
int arc_crossings(const ArcSeg& a, const Vec2& p) {
    double dy = p.y - a.center.y;
    if (std::abs(dy) >= a.radius) return 0;  // miss or tangent
    double dx = std::sqrt(a.radius * a.radius - dy * dy);
    double from = a.sweep >= 0 ? a.start_angle : a.start_angle + a.sweep;
    double span = std::abs(a.sweep);
    int crossings = 0;
    for (double sx : {dx, -dx}) {
        double x = a.center.x + sx;
        if (x <= p.x) continue;
        double theta = std::atan2(dy, sx);
        double rel = theta - from;
        while (rel < 0) rel += 2 * kPi;
        while (rel >= 2 * kPi) rel -= 2 * kPi;
        if (rel < span) ++crossings;
    }
    return crossings;
}

}  // namespace

bool SketchProfile::contains(const Vec2& p) const {
    // Even-odd over all loops; lines and arcs tested exactly, Beziers via
    // their cached flattening.
    int crossings = 0;
    size_t si = 0;
    for (const auto& loop : loops_) {
        for (const auto& seg : loop.segments) {
            const Aabb2& box = seg_bbox_[si];
            if (p.y >= box.lo.y && p.y <= box.hi.y && p.x <= box.hi.x) {
                std::visit(
                    [&](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, LineSeg>) {
                            if ((v.p0.y <= p.y) != (v.p1.y <= p.y)) {
                                double x = v.p0.x + (p.y - v.p0.y) / (v.p1.y - v.p0.y) *
                                                        (v.p1.x - v.p0.x);
                                if (x > p.x) ++crossings;
                            }
                        } else if constexpr (std::is_same_v<T, ArcSeg>) {
                            crossings += arc_crossings(v, p);
                        } else {
                            const auto& poly = seg_poly_[si];
                            crossings += polyline_crossings(poly.data(), poly.size(), p, false);
                        }
                    },
                    seg);
            }
            ++si;
        }
    }
    return (crossings % 2) == 1;
}

double SketchProfile::sdf(const Vec2& p) const {
    double d = std::numeric_limits<double>::max();
    size_t si = 0;
    for (const auto& loop : loops_) {
        for (const auto& seg : loop.segments) {
            if (seg_bbox_[si].dist2(p) < d * d) d = std::min(d, distance_to_segment(seg, p));
            ++si;
        }
    }
    return contains(p) ? -d : d;
}

double SketchProfile::area() const {
    double a = 0;
    for (const auto& poly : flat_) {
        double sa = 0;
        size_t n = poly.size();
        for (size_t i = 0; i < n; ++i) sa += poly[i].cross(poly[(i + 1) % n]);
        a += sa * 0.5;  // holes are CW and subtract
    }
    return std::abs(a);
}

Vec2 SketchProfile::boundary_point(double u, Vec2* outward_normal) const {
    double target = clampd(u, 0.0, 1.0) * total_length_;
    size_t idx = std::lower_bound(cum_len_.begin(), cum_len_.end(), target) - cum_len_.begin();
    if (idx >= seg_len_.size()) idx = seg_len_.size() - 1;
    double before = idx == 0 ? 0.0 : cum_len_[idx - 1];
    double local = seg_len_[idx] > 0 ? (target - before) / seg_len_[idx] : 0.0;
    // Locate the segment within its loop.
    size_t seg_idx = idx;
    const SketchLoop* loop = nullptr;
    for (const auto& l : loops_) {
        if (seg_idx < l.segments.size()) {
            loop = &l;
            break;
        }
        seg_idx -= l.segments.size();
    }
    const SketchSegment& seg = loop->segments[seg_idx];
    Vec2 pt, tangent;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LineSeg>) {
                pt = v.p0 + (v.p1 - v.p0) * local;
                tangent = (v.p1 - v.p0).normalized();
            } else if constexpr (std::is_same_v<T, ArcSeg>) {
                pt = v.point_at(local);
                double a = v.start_angle + v.sweep * local;
                tangent = Vec2{-std::sin(a), std::cos(a)} * (v.sweep >= 0 ? 1.0 : -1.0);
            } else {
                pt = v.point_at(local);
                tangent = v.deriv_at(local).normalized();
            }
        },
        seg);
    if (outward_normal) {
        Vec2 n = Vec2{tangent.y, -tangent.x};  // right of travel
        // Orient by probing: outward means outside the region.
        double probe = 1e-5;
        if (contains(pt + n * probe)) n = n * -1.0;
        *outward_normal = n;
    }
    return pt;
}

SketchProfile SketchProfile::unit_circle() {
    SketchLoop loop;
    loop.segments.push_back(ArcSeg{{0, 0}, 1.0, 0.0, 2 * kPi});
    return SketchProfile({loop});
}

SketchProfile SketchProfile::rectangle(double hw, double hh) {
    SketchLoop loop;
    Vec2 a{-hw, -hh}, b{hw, -hh}, c{hw, hh}, d{-hw, hh};
    loop.segments = {SketchSegment{LineSeg{a, b}}, SketchSegment{LineSeg{b, c}},
                     SketchSegment{LineSeg{c, d}}, SketchSegment{LineSeg{d, a}}};
    return SketchProfile({loop});
}

SketchProfile SketchProfile::regular_polygon(int n, double radius) {
    SketchLoop loop;
    for (int i = 0; i < n; ++i) {
        double a0 = 2 * kPi * i / n, a1 = 2 * kPi * (i + 1) / n;
        loop.segments.push_back(LineSeg{{radius * std::cos(a0), radius * std::sin(a0)},
                                        {radius * std::cos(a1), radius * std::sin(a1)}});
    }
    return SketchProfile({loop});
}

}  // namespace cylrev
