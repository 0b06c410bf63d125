#include "cylrev/mec.hpp"

#include "cylrev/rng.hpp"

namespace cylrev {

namespace {

bool in_circle(const Circle2& c, const Vec2& p) {
    return (p - c.center).norm() <= c.radius + 1e-12;
}

Circle2 circle_from(const Vec2& a, const Vec2& b) {
    Circle2 c;
    c.center = (a + b) * 0.5;
    c.radius = (a - b).norm() * 0.5;
    return c;
}

Circle2 circle_from(const Vec2& a, const Vec2& b, const Vec2& c) {
    double ax = a.x, ay = a.y, bx = b.x, by = b.y, cx = c.x, cy = c.y;
    double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
    if (std::abs(d) < 1e-18) {
        // Collinear: fall back to the widest pair.
        Circle2 ab = circle_from(a, b), bc = circle_from(b, c), ac = circle_from(a, c);
        Circle2 best = ab;
        if (bc.radius > best.radius) best = bc;
        if (ac.radius > best.radius) best = ac;
        return best;
    }
    double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) +
                 (cx * cx + cy * cy) * (ay - by)) /
                d;
    double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) +
                 (cx * cx + cy * cy) * (bx - ax)) /
                d;
    Circle2 out;
    out.center = {ux, uy};
    out.radius = (a - out.center).norm();
    return out;
}

}  // namespace

Circle2 minimal_enclosing_circle(std::vector<Vec2> pts) {
    if (pts.empty()) return {};
    if (pts.size() == 1) return {pts[0], 0.0};

    Rng rng(0x3ec, pts.size());
    for (size_t i = pts.size() - 1; i > 0; --i)
        std::swap(pts[i], pts[rng.next_u64() % (i + 1)]);

    // Incremental Welzl without recursion.
    Circle2 c = circle_from(pts[0], pts[1]);
    for (size_t i = 2; i < pts.size(); ++i) {
        if (in_circle(c, pts[i])) continue;
        c = circle_from(pts[0], pts[i]);
        for (size_t j = 1; j < i; ++j) {
            if (in_circle(c, pts[j])) continue;
            c = circle_from(pts[i], pts[j]);
            for (size_t k = 0; k < j; ++k) {
                if (in_circle(c, pts[k])) continue;
                c = circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    return c;
}

}  // namespace cylrev
