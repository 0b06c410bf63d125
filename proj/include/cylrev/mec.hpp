#pragma once

#include <vector>

#include "cylrev/geom.hpp"

namespace cylrev {

struct Circle2 {
    Vec2 center;
    double radius = 0.0;
};

// Minimal enclosing circle (Welzl, expected linear time). Deterministic: the
// internal shuffle is seeded from the point count.
Circle2 minimal_enclosing_circle(std::vector<Vec2> points);

}  // namespace cylrev
