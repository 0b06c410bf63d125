#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cylrev/geom.hpp"

namespace cylrev {

enum class CloudSource : uint8_t { Surface = 0, Curve = 1 };

// Points with per-point extrusion instance id (1-based; 0 is reserved for
// background and never stored) and class id. For surface clouds cls is
// 1=start 2=end 3=barrel, for curve clouds 1=start 2=end.
struct LabeledPointCloud {
    std::vector<Vec3> points;
    std::vector<uint8_t> instance;
    std::vector<uint8_t> cls;
    CloudSource source = CloudSource::Surface;

    size_t size() const { return points.size(); }
    void push(const Vec3& p, uint8_t inst, uint8_t c) {
        points.push_back(p);
        instance.push_back(inst);
        cls.push_back(c);
    }
};

void save_ply(const LabeledPointCloud& cloud, const std::string& path);
LabeledPointCloud load_ply(const std::string& path);

}  // namespace cylrev
