#pragma once

#include <cstdint>
#include <vector>

#include "cylrev/labelset.hpp"
#include "cylrev/voxel_field.hpp"

namespace cylrev {

struct FieldDivergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainConfig {
    int iterations = 1500;
    int ray_batch = 8192;
    int samples_per_ray = 256;
    double lr_grid = 0.05;
    double lr_alpha = 0.01;
    double lambda_sparsity = 0.5;
    double sparsity_scale = 0.5;  // s in log(1 + F^2/s)
    double eta_batch = 0.1;
    double eta_image = 0.05;  // listed alongside the field hyperparameters but
                              // unused: no loss term consumes it
    double beta = 0.8;
    double zeta = 10.0;
    int field_resolution = 64;
    int align_every = 50;
    int align_stride = 4;  // pixel subsampling for the alignment overlap counts
    uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

// One observed ray: origin/direction plus the aligned supervision labels.
struct RayObs {
    Ray ray;
    float e = 0.0f;    // observed density in {0,1}
    uint8_t inst = 0;  // 0 = background
    uint8_t cls = 0;   // 0 = background
    uint64_t jitter = 0;  // stratified-sampling stream
};

struct FieldGradients {
    std::vector<float> density, inst, cls;
    double alpha = 0.0;

    void resize(const VoxelField& f) {
        density.assign(f.density.size(), 0.0f);
        inst.assign(f.inst_logits.size(), 0.0f);
        cls.assign(f.cls_logits.size(), 0.0f);
        alpha = 0.0;
    }
};

struct RenderedRay {
    double e_hat = 0.0;
    std::vector<double> inst;  // normalized distribution, inst_channels()
    std::vector<double> cls;   // normalized distribution, n_classes
};

// Forward volume rendering of one ray: stratified samples, exponential
// transmittance, weights w_j = T_j (1 - exp(-sigma_j * delta_j)).
RenderedRay render_ray(const VoxelField& f, const Ray& ray, int n_samples, uint64_t jitter = 0);

struct LossStats {
    double density_data = 0.0;  // (1/N_rays) sum W_batch (E - Ê)^2
    double sparsity = 0.0;      // lambda/(N bg samples) sum log(1 + F^2/s)
    double semantic = 0.0;      // summed cross-entropy over the batch
    int n_rays = 0;
    int n_bg_samples = 0;

    double density_total() const { return density_data + sparsity; }
};

// Adaptive-L2 density loss with the batch imbalance weight and background
// sparsity term. Gradients (scaled by `scale`) are accumulated into *grads
// when non-null.
LossStats density_loss(const VoxelField& f, const std::vector<RayObs>& batch,
                       const TrainConfig& cfg, FieldGradients* grads = nullptr,
                       double scale = 1.0);

// Multi-class cross-entropy over instance and class heads, summed over rays.
LossStats semantic_loss(const VoxelField& f, const std::vector<RayObs>& batch,
                        const TrainConfig& cfg, FieldGradients* grads = nullptr,
                        double scale = 1.0);

// Per-view relabeling: observed instance i should be treated as field
// instance perm[i]; swap exchanges start and end classes.
struct ViewAlignment {
    std::vector<int> perm;  // size K+1, perm[0] == 0
    bool swap = false;
};

ViewAlignment align_view_labels(const LabelImage& rendered_inst, const LabelImage& rendered_cls,
                                const LabelImage& observed_inst, const LabelImage& observed_cls);

struct TrainDiagnostics {
    std::vector<double> loss_history;
    std::vector<ViewAlignment> alignment;  // final per-view state
};

VoxelField optimize_field_single(const LabelImageSet& maps, CloudSource kind,
                                 const TrainConfig& cfg, TrainDiagnostics* diag = nullptr);

// Trains the surface and curve fields from one label set.
FieldPair optimize_field(const LabelImageSet& maps, const TrainConfig& cfg,
                         TrainDiagnostics* surface_diag = nullptr,
                         TrainDiagnostics* curve_diag = nullptr);

}  // namespace cylrev
