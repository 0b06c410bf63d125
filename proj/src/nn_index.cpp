#include "cylrev/nn_index.hpp"

#include <omp.h>

#include <cmath>
#include <stdexcept>

namespace cylrev {

NnIndex::NnIndex(const std::vector<Vec3>& points) : pts_(points) {
    if (pts_.empty()) throw std::invalid_argument("NnIndex needs a nonempty point set");
    for (const auto& p : pts_) box_.expand(p);
    box_.lo -= Vec3{1e-9, 1e-9, 1e-9};
    box_.hi += Vec3{1e-9, 1e-9, 1e-9};
    Vec3 ext = box_.extent();
    double vol = std::max(ext.x * ext.y * ext.z, 1e-12);
    // About one point per cell on average.
    cell_ = std::max(std::cbrt(vol / pts_.size()), 1e-6);
    nx_ = std::max(1, std::min(256, static_cast<int>(std::ceil(ext.x / cell_))));
    ny_ = std::max(1, std::min(256, static_cast<int>(std::ceil(ext.y / cell_))));
    nz_ = std::max(1, std::min(256, static_cast<int>(std::ceil(ext.z / cell_))));
    cells_.resize(size_t(nx_) * ny_ * nz_);
    for (size_t i = 0; i < pts_.size(); ++i) {
        const Vec3& p = pts_[i];
        int ix = std::min(nx_ - 1, static_cast<int>((p.x - box_.lo.x) / ext.x * nx_));
        int iy = std::min(ny_ - 1, static_cast<int>((p.y - box_.lo.y) / ext.y * ny_));
        int iz = std::min(nz_ - 1, static_cast<int>((p.z - box_.lo.z) / ext.z * nz_));
        cells_[cell_index(ix, iy, iz)].push_back(static_cast<int>(i));
    }
}

double NnIndex::nearest2(const Vec3& q, size_t* idx) const {
    Vec3 ext = box_.extent();
    double sx = ext.x / nx_, sy = ext.y / ny_, sz = ext.z / nz_;
    int cx = std::clamp(static_cast<int>((q.x - box_.lo.x) / sx), 0, nx_ - 1);
    int cy = std::clamp(static_cast<int>((q.y - box_.lo.y) / sy), 0, ny_ - 1);
    int cz = std::clamp(static_cast<int>((q.z - box_.lo.z) / sz), 0, nz_ - 1);

    // Ring distance bound only grows along axes that actually have cells.
    double smin = std::numeric_limits<double>::max();
    if (nx_ > 1) smin = std::min(smin, sx);
    if (ny_ > 1) smin = std::min(smin, sy);
    if (nz_ > 1) smin = std::min(smin, sz);
    if (!std::isfinite(smin)) smin = 0.0;  // single cell: one ring covers all

    double best = std::numeric_limits<double>::max();
    size_t best_idx = 0;
    const int max_ring = std::max({nx_, ny_, nz_});
    for (int ring = 0; ring <= max_ring; ++ring) {
        if (ring > 1 && smin > 0) {
            double ring_dist = (ring - 1) * smin;
            if (best < ring_dist * ring_dist) break;
        }
        for (int dz = -ring; dz <= ring; ++dz) {
            int iz = cz + dz;
            if (iz < 0 || iz >= nz_) continue;
            for (int dy = -ring; dy <= ring; ++dy) {
                int iy = cy + dy;
                if (iy < 0 || iy >= ny_) continue;
                for (int dx = -ring; dx <= ring; ++dx) {
                    // Shell only.
                    if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                    int ix = cx + dx;
                    if (ix < 0 || ix >= nx_) continue;
                    for (int pi : cells_[cell_index(ix, iy, iz)]) {
                        double d2 = (pts_[pi] - q).norm2();
                        if (d2 < best) {
                            best = d2;
                            best_idx = pi;
                        }
                    }
                }
            }
        }
    }
    if (idx) *idx = best_idx;
    return best;
}

double one_way_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool squared,
                       int threads) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer needs nonempty point sets");
    NnIndex index(b);
    double sum = 0;
#pragma omp parallel for schedule(static) reduction(+ : sum) num_threads(std::max(1, threads))
    for (int64_t i = 0; i < int64_t(a.size()); ++i) {
        double d2 = index.nearest2(a[i]);
        sum += squared ? d2 : std::sqrt(d2);
    }
    return sum / double(a.size());
}

double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b, bool squared,
               int threads) {
    return 0.5 * (one_way_chamfer(a, b, squared, threads) +
                  one_way_chamfer(b, a, squared, threads));
}

}  // namespace cylrev
