#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cylrev/geom.hpp"
#include "cylrev/pointcloud.hpp"

namespace cylrev {

// Eq.-style learnable sigmoid turning density into opacity:
// sigma = alpha / (1 + exp(-zeta * (F - beta))). Monotone, range (0, alpha).
inline double sigma_transform(double f_val, double alpha, double beta, double zeta) {
    return alpha / (1.0 + std::exp(-zeta * (f_val - beta)));
}

// Dense voxel backbone for one field type (surface or curve): a scalar
// density grid plus instance and class logit grids, trilinearly interpolated.
// Grids are node-centered over the cube [-bound, bound]^3.
struct VoxelField {
    CloudSource kind = CloudSource::Surface;
    int res = 64;
    int n_instances = 0;  // K; instance channels = K+1 (0 = background)
    int n_classes = 4;    // surface: bg/start/end/barrel; curve: bg/start/end
    float alpha = 1.0f;   // learnable opacity scale
    float beta = 0.8f;    // fixed
    float zeta = 10.0f;   // fixed
    double bound = 1.1;

    std::vector<float> density;      // res^3
    std::vector<float> inst_logits;  // res^3 * (K+1), channel-contiguous
    std::vector<float> cls_logits;   // res^3 * n_classes

    void allocate() {
        size_t n = size_t(res) * res * res;
        density.assign(n, 0.0f);
        inst_logits.assign(n * inst_channels(), 0.0f);
        cls_logits.assign(n * n_classes, 0.0f);
    }
    int inst_channels() const { return n_instances + 1; }
    size_t voxel_index(int ix, int iy, int iz) const {
        return (size_t(iz) * res + iy) * res + ix;
    }
    double spacing() const { return 2.0 * bound / (res - 1); }

    // Trilinear interpolation context for a point inside the domain.
    struct Cell {
        size_t corner[8];
        double w[8];
        bool ok = false;
    };
    Cell locate(const Vec3& p) const;

    double density_at(const Vec3& p) const;
    double sigma_at(const Vec3& p) const {
        return sigma_transform(density_at(p), alpha, beta, zeta);
    }
    // Interpolated logits; out must hold inst_channels()/n_classes entries.
    void inst_logits_at(const Cell& c, double* out) const;
    void cls_logits_at(const Cell& c, double* out) const;

    Aabb domain() const {
        return {{-bound, -bound, -bound}, {bound, bound, bound}};
    }
};

struct FieldPair {
    VoxelField surface;
    VoxelField curve;
};

// Binary checkpoint: header + little-endian float32 grids.
void save_field(const VoxelField& f, const std::string& path);
VoxelField load_field(const std::string& path);

void save_field_pair(const FieldPair& pair, const std::string& dir);
FieldPair load_field_pair(const std::string& dir);

}  // namespace cylrev
