#pragma once

#include <vector>

#include "cylrev/geom.hpp"

namespace cylrev {

// Uniform-grid nearest-neighbor index over a fixed point set. Exact queries
// (expanding shell search); build once, query from any thread.
class NnIndex {
  public:
    explicit NnIndex(const std::vector<Vec3>& points);

    // Squared distance to the nearest indexed point (and its index).
    double nearest2(const Vec3& q, size_t* idx = nullptr) const;
    size_t size() const { return pts_.size(); }

  private:
    std::vector<Vec3> pts_;
    Aabb box_;
    double cell_ = 1.0;
    int nx_ = 1, ny_ = 1, nz_ = 1;
    std::vector<std::vector<int>> cells_;

    int cell_index(int ix, int iy, int iz) const { return (iz * ny_ + iy) * nx_ + ix; }
};

// Symmetric mean-of-means of squared nearest-neighbor distances.
double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool squared = true,
               int threads = 1);

// Mean over a of (squared) distance to nearest point of b.
double one_way_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                       bool squared = true, int threads = 1);

}  // namespace cylrev
