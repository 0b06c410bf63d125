#include "cylrev/field_train.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>

#include "cylrev/hungarian.hpp"
#include "cylrev/model.hpp"  // kMaxInstances
#include "cylrev/rng.hpp"

namespace cylrev {

namespace {

constexpr double kTermTransmittance = 1e-3;  // early ray termination
// Semantic softmax work is keyed on the sigmoid value, not the weight: empty
// space sits at sigmoid(-zeta*beta) ~ 3e-4 regardless of alpha and delta, so
// this skips it while every near-surface sample still participates.
constexpr double kSemanticSgmCutoff = 0.02;
constexpr double kMinRayWeight = 1e-6;       // below this, uniform fallback
constexpr double kProbClamp = 1e-7;
constexpr int kMaxCh = kMaxInstances + 1;

struct SampleRec {
    VoxelField::Cell cell;
    double f = 0, sgm = 0, a = 0, delta = 0, w = 0, T = 1;
    bool material = false;  // semantic softmax cached
};

struct RayWork {
    std::vector<SampleRec> rec;
    std::vector<double> pinst;  // rec.size() * inst_ch
    std::vector<double> pcls;   // rec.size() * n_classes
    std::vector<double> dldw;
    int cap_inst = 0, cap_cls = 0;

    // Buffers persist thread-locally across fields with different channel
    // counts; capacity must cover both dimensions.
    void ensure(int n_samples, int inst_ch, int n_classes) {
        if (static_cast<int>(rec.size()) < n_samples || cap_inst < inst_ch ||
            cap_cls < n_classes) {
            int n = std::max<int>(n_samples, static_cast<int>(rec.size()));
            cap_inst = std::max(cap_inst, inst_ch);
            cap_cls = std::max(cap_cls, n_classes);
            rec.resize(n);
            pinst.resize(size_t(n) * cap_inst);
            pcls.resize(size_t(n) * cap_cls);
            dldw.resize(n);
        }
    }
};

void softmax(const double* z, int n, double* out) {
    double mx = z[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, z[i]);
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        out[i] = std::exp(z[i] - mx);
        sum += out[i];
    }
    for (int i = 0; i < n; ++i) out[i] /= sum;
}

// Stratified forward pass. Fills wk and returns the number of samples taken.
// U_inst/U_cls (unnormalized semantic sums) are accumulated when want_sem.
int ray_forward(const VoxelField& f, const Ray& ray, uint64_t jitter, int n_samples,
                bool want_sem, RayWork& wk, double& e_hat, double* u_inst, double* u_cls) {
    const int inst_ch = f.inst_channels();
    wk.ensure(n_samples, inst_ch, f.n_classes);
    e_hat = 0;
    if (want_sem) {
        std::fill(u_inst, u_inst + inst_ch, 0.0);
        std::fill(u_cls, u_cls + f.n_classes, 0.0);
    }
    double t0, t1;
    Aabb box = f.domain();
    if (!box.intersect(ray, t0, t1) || t1 <= t0) return 0;

    Rng rng(jitter);
    const double dt = (t1 - t0) / n_samples;
    // Sample positions first (jitter draws are always consumed in order).
    std::vector<double>& dldw = wk.dldw;  // reuse as scratch for t values
    for (int j = 0; j < n_samples; ++j) dldw[j] = t0 + (j + rng.next_double()) * dt;

    double zlog[kMaxCh];
    double T = 1.0;
    int taken = 0;
    for (int j = 0; j < n_samples; ++j) {
        double t = dldw[j];
        double delta = (j + 1 < n_samples ? dldw[j + 1] : t1) - t;
        SampleRec& r = wk.rec[j];
        r.cell = f.locate(ray.at(t));
        if (!r.cell.ok) {
            r.f = 0;
            r.sgm = 0;
            r.a = 0;
            r.w = 0;
            r.T = T;
            r.delta = delta;
            r.material = false;
            ++taken;
            continue;
        }
        double fv = 0;
        for (int c = 0; c < 8; ++c) fv += r.cell.w[c] * f.density[r.cell.corner[c]];
        double sgm = 1.0 / (1.0 + std::exp(-f.zeta * (fv - f.beta)));
        double sigma = f.alpha * sgm;
        double a = sigma * delta;
        double exp_neg_a = std::exp(-a);
        double w = T * (1.0 - exp_neg_a);
        r.f = fv;
        r.sgm = sgm;
        r.a = a;
        r.delta = delta;
        r.w = w;
        r.T = T;
        r.material = false;
        e_hat += w;
        if (want_sem && sgm > kSemanticSgmCutoff && w > 0) {
            r.material = true;
            f.inst_logits_at(r.cell, zlog);
            softmax(zlog, inst_ch, &wk.pinst[size_t(j) * inst_ch]);
            for (int l = 0; l < inst_ch; ++l) u_inst[l] += w * wk.pinst[size_t(j) * inst_ch + l];
            f.cls_logits_at(r.cell, zlog);
            softmax(zlog, f.n_classes, &wk.pcls[size_t(j) * f.n_classes]);
            for (int l = 0; l < f.n_classes; ++l)
                u_cls[l] += w * wk.pcls[size_t(j) * f.n_classes + l];
        }
        T *= exp_neg_a;
        ++taken;
        if (T < kTermTransmittance) break;
    }
    return taken;
}

// Reverse pass shared by both losses. g_e is dL/d(e_hat) and reaches every
// sample; g_w_mat is dL/dW for the semantic normalizer W = sum of material
// weights and reaches material samples only, as do the gu_* terms.
// sparsity_coeff, when nonzero, adds d/dF of sparsity_coeff*log(1+F^2/s).
void ray_backward(const VoxelField& f, RayWork& wk, int taken, double g_e, double g_w_mat,
                  const double* gu_inst, const double* gu_cls, double sparsity_coeff,
                  double sparsity_s, FieldGradients& grads) {
    const int inst_ch = f.inst_channels();
    for (int j = 0; j < taken; ++j) {
        const SampleRec& r = wk.rec[j];
        double v = g_e;
        if (r.material) {
            v += g_w_mat;
            if (gu_inst) {
                const double* p = &wk.pinst[size_t(j) * inst_ch];
                for (int l = 0; l < inst_ch; ++l) v += gu_inst[l] * p[l];
            }
            if (gu_cls) {
                const double* p = &wk.pcls[size_t(j) * f.n_classes];
                for (int l = 0; l < f.n_classes; ++l) v += gu_cls[l] * p[l];
            }
        }
        wk.dldw[j] = v;
    }
    // dL/da_k = dL/dw_k T_k e^{-a_k} - sum_{j>k} dL/dw_j w_j.
    double suffix = 0;
    for (int j = taken - 1; j >= 0; --j) {
        const SampleRec& r = wk.rec[j];
        if (!r.cell.ok) continue;
        double dl_da = wk.dldw[j] * r.T * std::exp(-r.a) - suffix;
        suffix += wk.dldw[j] * r.w;
        double dl_dsigma = dl_da * r.delta;
        grads.alpha += dl_dsigma * r.sgm;
        double dl_df = dl_dsigma * f.alpha * f.zeta * r.sgm * (1.0 - r.sgm);
        if (sparsity_coeff != 0.0)
            dl_df += sparsity_coeff * 2.0 * r.f / (sparsity_s + r.f * r.f);
        for (int c = 0; c < 8; ++c)
            grads.density[r.cell.corner[c]] += static_cast<float>(dl_df * r.cell.w[c]);

        // Softmax backward for the logit heads.
        if (r.material) {
            if (gu_inst) {
                const double* p = &wk.pinst[size_t(j) * inst_ch];
                double dot = 0;
                for (int l = 0; l < inst_ch; ++l) dot += gu_inst[l] * p[l];
                for (int c = 0; c < 8; ++c) {
                    float* g = &grads.inst[r.cell.corner[c] * inst_ch];
                    double cw = r.cell.w[c] * r.w;
                    for (int l = 0; l < inst_ch; ++l)
                        g[l] += static_cast<float>(cw * p[l] * (gu_inst[l] - dot));
                }
            }
            if (gu_cls) {
                const double* p = &wk.pcls[size_t(j) * f.n_classes];
                double dot = 0;
                for (int l = 0; l < f.n_classes; ++l) dot += gu_cls[l] * p[l];
                for (int c = 0; c < 8; ++c) {
                    float* g = &grads.cls[r.cell.corner[c] * f.n_classes];
                    double cw = r.cell.w[c] * r.w;
                    for (int l = 0; l < f.n_classes; ++l)
                        g[l] += static_cast<float>(cw * p[l] * (gu_cls[l] - dot));
                }
            }
        }
    }
}

}  // namespace

void TrainConfig::validate() const {
    if (iterations < 1 || ray_batch < 1 || samples_per_ray < 4)
        throw ValidationError("train config: iterations/ray_batch/samples out of range");
    if (!(lr_grid > 0) || !(lr_alpha >= 0)) throw ValidationError("train config: bad learning rate");
    if (lambda_sparsity < 0 || sparsity_scale <= 0)
        throw ValidationError("train config: bad sparsity settings");
    if (zeta <= 0 || field_resolution < 8) throw ValidationError("train config: bad field shape");
    if (align_every < 1 || align_stride < 1) throw ValidationError("train config: bad align cadence");
}

RenderedRay render_ray(const VoxelField& f, const Ray& ray, int n_samples, uint64_t jitter) {
    thread_local RayWork wk;
    RenderedRay out;
    const int inst_ch = f.inst_channels();
    out.inst.assign(inst_ch, 0.0);
    out.cls.assign(f.n_classes, 0.0);
    double u_inst[kMaxCh], u_cls[kMaxCh];
    ray_forward(f, ray, jitter, n_samples, true, wk, out.e_hat, u_inst, u_cls);
    out.e_hat = clampd(out.e_hat, 0.0, 1.0);
    double w = 0;
    for (int l = 0; l < inst_ch; ++l) w += u_inst[l];
    if (w < kMinRayWeight) {
        for (auto& v : out.inst) v = 1.0 / inst_ch;
        for (auto& v : out.cls) v = 1.0 / f.n_classes;
    } else {
        for (int l = 0; l < inst_ch; ++l) out.inst[l] = u_inst[l] / w;
        double wc = 0;
        for (int l = 0; l < f.n_classes; ++l) wc += u_cls[l];
        for (int l = 0; l < f.n_classes; ++l) out.cls[l] = u_cls[l] / wc;
    }
    return out;
}

LossStats density_loss(const VoxelField& f, const std::vector<RayObs>& batch,
                       const TrainConfig& cfg, FieldGradients* grads, double scale) {
    LossStats stats;
    stats.n_rays = static_cast<int>(batch.size());
    if (batch.empty()) return stats;

    int n_fg = 0;
    for (const auto& r : batch) n_fg += r.e > cfg.eta_batch;
    const int n = stats.n_rays;
    double frac = double(n_fg) / n;
    double w_fg = 1.0 - frac, w_bg = frac;
    if (n_fg == 0 || n_fg == n) w_fg = w_bg = 1.0;  // degenerate batch

    const int n_bg = n - n_fg;
    const double sparsity_norm =
        n_bg > 0 ? 1.0 / (double(n_bg) * cfg.samples_per_ray) : 0.0;

    thread_local RayWork wk;
    for (const auto& obs : batch) {
        bool fg = obs.e > cfg.eta_batch;
        double e_hat;
        int taken = ray_forward(f, obs.ray, obs.jitter, cfg.samples_per_ray, false, wk, e_hat,
                                nullptr, nullptr);
        double wr = fg ? w_fg : w_bg;
        double resid = obs.e - e_hat;
        stats.density_data += wr * resid * resid / n;
        double sp_coeff = 0.0;
        if (!fg && cfg.lambda_sparsity > 0) {
            stats.n_bg_samples += taken;
            for (int j = 0; j < taken; ++j) {
                double fv = wk.rec[j].f;
                stats.sparsity +=
                    cfg.lambda_sparsity * sparsity_norm * std::log1p(fv * fv / cfg.sparsity_scale);
            }
            sp_coeff = scale * cfg.lambda_sparsity * sparsity_norm;
        }
        if (grads) {
            double g_e = scale * wr * 2.0 * (e_hat - obs.e) / n;
            ray_backward(f, wk, taken, g_e, 0.0, nullptr, nullptr, sp_coeff,
                         cfg.sparsity_scale, *grads);
        }
    }
    return stats;
}

LossStats semantic_loss(const VoxelField& f, const std::vector<RayObs>& batch,
                        const TrainConfig& cfg, FieldGradients* grads, double scale) {
    LossStats stats;
    stats.n_rays = static_cast<int>(batch.size());
    const int inst_ch = f.inst_channels();

    thread_local RayWork wk;
    double u_inst[kMaxCh], u_cls[kMaxCh], gu_inst[kMaxCh], gu_cls[kMaxCh];
    for (const auto& obs : batch) {
        double e_hat;
        int taken =
            ray_forward(f, obs.ray, obs.jitter, cfg.samples_per_ray, true, wk, e_hat, u_inst, u_cls);
        double w = 0;
        for (int l = 0; l < inst_ch; ++l) w += u_inst[l];
        if (w < kMinRayWeight) {
            // Uniform fallback: constant, no gradient.
            stats.semantic += std::log(double(inst_ch)) + std::log(double(f.n_classes));
            continue;
        }
        double p_inst = clampd(u_inst[obs.inst] / w, kProbClamp, 1.0);
        double wc = 0;
        for (int l = 0; l < f.n_classes; ++l) wc += u_cls[l];
        double p_cls = clampd(u_cls[obs.cls] / wc, kProbClamp, 1.0);
        stats.semantic += -std::log(p_inst) - std::log(p_cls);
        if (!grads) continue;

        std::fill(gu_inst, gu_inst + inst_ch, 0.0);
        std::fill(gu_cls, gu_cls + f.n_classes, 0.0);
        // d(-log(U_l*/W))/dU_l = -1/U_l*, plus a +1/W term on the material
        // weight sum W for each unclamped head.
        double g_w = 0;
        if (u_inst[obs.inst] / w > kProbClamp) {
            gu_inst[obs.inst] += -scale / std::max(u_inst[obs.inst], 1e-300);
            g_w += scale / w;
        }
        if (u_cls[obs.cls] / wc > kProbClamp) {
            gu_cls[obs.cls] += -scale / std::max(u_cls[obs.cls], 1e-300);
            g_w += scale / wc;
        }
        ray_backward(f, wk, taken, 0.0, g_w, gu_inst, gu_cls, 0.0, cfg.sparsity_scale, *grads);
    }
    return stats;
}

ViewAlignment align_view_labels(const LabelImage& rendered_inst, const LabelImage& rendered_cls,
                                const LabelImage& observed_inst, const LabelImage& observed_cls) {
    int k = 0;
    for (uint8_t v : rendered_inst.data) k = std::max(k, int(v));
    for (uint8_t v : observed_inst.data) k = std::max(k, int(v));

    ViewAlignment out;
    out.perm.resize(k + 1);
    for (int i = 0; i <= k; ++i) out.perm[i] = i;
    if (k == 0) return out;

    size_t n_fg = 0;
    for (uint8_t v : observed_inst.data) n_fg += v != 0;
    if (n_fg == 0) return out;  // identity

    std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
    for (size_t i = 0; i < observed_inst.data.size(); ++i) {
        int oi = observed_inst.data[i], ri = rendered_inst.data[i];
        if (oi > 0 && ri > 0) cost[oi - 1][ri - 1] -= 1.0;
    }
    auto assign = hungarian_assign(cost);
    for (int i = 0; i < k; ++i)
        if (assign[i] >= 0) out.perm[i + 1] = assign[i] + 1;

    long keep = 0, swapped = 0;
    for (size_t i = 0; i < observed_cls.data.size(); ++i) {
        int oc = observed_cls.data[i], rc = rendered_cls.data[i];
        if ((oc == 1 || oc == 2) && (rc == 1 || rc == 2)) {
            if (oc == rc)
                ++keep;
            else
                ++swapped;
        }
    }
    out.swap = swapped > keep;
    return out;
}

namespace {

struct AdamState {
    std::vector<float> m, v;
    double m_alpha = 0, v_alpha = 0;
    int64_t t = 0;

    void resize(size_t n_density, size_t n_inst, size_t n_cls) {
        m.assign(n_density + n_inst + n_cls, 0.0f);
        v.assign(n_density + n_inst + n_cls, 0.0f);
    }
};

// Fused gradient reduction (fixed thread order) and Adam update: one pass
// over the parameters instead of reduce-then-step.
void adam_step_fused(VoxelField& f, const std::vector<FieldGradients>& tgrads, double g_alpha,
                     AdamState& st, const TrainConfig& cfg) {
    constexpr double b1 = 0.9, b2 = 0.99, eps = 1e-8;
    st.t += 1;
    const double bc1 = 1.0 - std::pow(b1, double(st.t));
    const double bc2 = 1.0 - std::pow(b2, double(st.t));
    const size_t nd = f.density.size(), ni = f.inst_logits.size(), nc = f.cls_logits.size();
    const int n_threads = std::max(1, cfg.threads);

    auto update = [&](float* param, size_t grad_offset, float* m, float* v, size_t n,
                      double lr) {
#pragma omp parallel for schedule(static) num_threads(n_threads)
        for (int64_t i = 0; i < int64_t(n); ++i) {
            float gsum = 0;
            for (int t = 0; t < n_threads; ++t) {
                const FieldGradients& tg = tgrads[t];
                const float* base = grad_offset == 0
                                        ? tg.density.data()
                                        : (grad_offset == 1 ? tg.inst.data() : tg.cls.data());
                gsum += base[i];
            }
            double gi = gsum;
            double mi = b1 * m[i] + (1 - b1) * gi;
            double vi = b2 * v[i] + (1 - b2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            param[i] -= static_cast<float>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + eps));
        }
    };
    update(f.density.data(), 0, st.m.data(), st.v.data(), nd, cfg.lr_grid);
    update(f.inst_logits.data(), 1, st.m.data() + nd, st.v.data() + nd, ni, cfg.lr_grid);
    update(f.cls_logits.data(), 2, st.m.data() + nd + ni, st.v.data() + nd + ni, nc,
           cfg.lr_grid);

    st.m_alpha = 0.9 * st.m_alpha + 0.1 * g_alpha;
    st.v_alpha = 0.99 * st.v_alpha + 0.01 * g_alpha * g_alpha;
    f.alpha -= static_cast<float>(cfg.lr_alpha * (st.m_alpha / bc1) /
                                  (std::sqrt(st.v_alpha / bc2) + 1e-8));
    f.alpha = std::max(f.alpha, 1e-3f);
}

struct ObservedView {
    const ViewLabels* view = nullptr;
    const LabelImage* inst = nullptr;
    const LabelImage* cls = nullptr;
};

}  // namespace

VoxelField optimize_field_single(const LabelImageSet& maps, CloudSource kind,
                                 const TrainConfig& cfg, TrainDiagnostics* diag) {
    cfg.validate();
    if (maps.views.size() < 3) throw ValidationError("field optimization needs at least 3 views");

    const int k = maps.max_instance_id();
    VoxelField field;
    field.kind = kind;
    field.res = cfg.field_resolution;
    field.n_instances = k;
    field.n_classes = kind == CloudSource::Surface ? 4 : 3;
    field.alpha = 1.0f;
    field.beta = static_cast<float>(cfg.beta);
    field.zeta = static_cast<float>(cfg.zeta);
    field.allocate();

    std::vector<ObservedView> obs(maps.views.size());
    for (size_t i = 0; i < maps.views.size(); ++i) {
        const auto& v = maps.views[i];
        obs[i].view = &v;
        obs[i].inst = kind == CloudSource::Surface ? &v.surface_instance : &v.curve_instance;
        obs[i].cls = kind == CloudSource::Surface ? &v.surface_cls : &v.curve_cls;
    }
    const int vh = obs[0].view->camera.height, vw = obs[0].view->camera.width;
    const int64_t px_per_view = int64_t(vh) * vw;
    const int64_t total_px = px_per_view * int64_t(obs.size());

    std::vector<ViewAlignment> align(obs.size());
    for (auto& a : align) {
        a.perm.resize(k + 1);
        for (int i = 0; i <= k; ++i) a.perm[i] = i;
    }

    const int n_threads = std::max(1, cfg.threads);
    std::vector<FieldGradients> tgrads(n_threads);
    for (auto& g : tgrads) g.resize(field);
    AdamState adam;
    adam.resize(field.density.size(), field.inst_logits.size(), field.cls_logits.size());

    const uint64_t run_seed = hash_combine(cfg.seed, kind == CloudSource::Surface ? 0x5f : 0xc0);
    std::vector<RayObs> batch(cfg.ray_batch);
    std::vector<double> history;
    history.reserve(cfg.iterations);

    auto realign = [&]() {
        const int stride = cfg.align_stride;
        const int n_samp = std::max(32, cfg.samples_per_ray / 4);
#pragma omp parallel for schedule(dynamic, 1) num_threads(n_threads)
        for (size_t vi = 0; vi < obs.size(); ++vi) {
            const Camera& cam = obs[vi].view->camera;
            int sh = (vh + stride - 1) / stride, sw = (vw + stride - 1) / stride;
            LabelImage rend_inst(sh, sw, 0), rend_cls(sh, sw, 0);
            LabelImage obs_inst(sh, sw, 0), obs_cls(sh, sw, 0);
            for (int r = 0; r < sh; ++r)
                for (int c = 0; c < sw; ++c) {
                    int row = r * stride, col = c * stride;
                    uint8_t oi = obs[vi].inst->at(row, col);
                    obs_inst.at(r, c) = oi;
                    obs_cls.at(r, c) = obs[vi].cls->at(row, col);
                    if (oi == 0) continue;  // only observed-fg pixels feed the costs
                    RenderedRay rr = render_ray(field, cam.pixel_ray(row, col), n_samp,
                                                hash_combine(run_seed, 0xa11a + vi));
                    if (rr.e_hat < 0.5) continue;
                    int bi = 0;
                    for (size_t l = 1; l < rr.inst.size(); ++l)
                        if (rr.inst[l] > rr.inst[bi]) bi = static_cast<int>(l);
                    int bc = 0;
                    for (size_t l = 1; l < rr.cls.size(); ++l)
                        if (rr.cls[l] > rr.cls[bc]) bc = static_cast<int>(l);
                    rend_inst.at(r, c) = static_cast<uint8_t>(bi);
                    rend_cls.at(r, c) = static_cast<uint8_t>(bc);
                }
            align[vi] = align_view_labels(rend_inst, rend_cls, obs_inst, obs_cls);
        }
    };

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        if (iter > 0 && iter % cfg.align_every == 0) realign();

        // Draw the batch serially so ray identity is schedule-independent.
        for (int b = 0; b < cfg.ray_batch; ++b) {
            Rng rng(hash_combine(run_seed, uint64_t(iter) * cfg.ray_batch + b));
            int64_t idx = int64_t(rng.next_double() * total_px) % total_px;
            size_t vi = size_t(idx / px_per_view);
            int pix = static_cast<int>(idx % px_per_view);
            int row = pix / vw, col = pix % vw;
            RayObs& ro = batch[b];
            ro.ray = obs[vi].view->camera.pixel_ray(row, col);
            uint8_t oi = obs[vi].inst->at(row, col);
            uint8_t oc = obs[vi].cls->at(row, col);
            ro.e = oi > 0 ? 1.0f : 0.0f;
            ro.inst = static_cast<uint8_t>(align[vi].perm[oi]);
            ro.cls = (align[vi].swap && (oc == 1 || oc == 2)) ? static_cast<uint8_t>(3 - oc) : oc;
            ro.jitter = rng.next_u64();
        }

        // Loss weights for this batch.
        int n_fg = 0;
        for (const auto& r : batch) n_fg += r.e > cfg.eta_batch;
        const int n = cfg.ray_batch;
        double frac = double(n_fg) / n;
        double w_fg = 1.0 - frac, w_bg = frac;
        if (n_fg == 0 || n_fg == n) w_fg = w_bg = 1.0;
        const int n_bg = n - n_fg;
        const double sparsity_norm = n_bg > 0 ? 1.0 / (double(n_bg) * cfg.samples_per_ray) : 0.0;
        const double sem_scale = 1.0 / n;

        std::vector<double> tloss(n_threads, 0.0);
#pragma omp parallel num_threads(n_threads)
        {
            const int tid = omp_get_thread_num();
            FieldGradients& g = tgrads[tid];
            std::memset(g.density.data(), 0, g.density.size() * sizeof(float));
            std::memset(g.inst.data(), 0, g.inst.size() * sizeof(float));
            std::memset(g.cls.data(), 0, g.cls.size() * sizeof(float));
            g.alpha = 0;
            RayWork wk;
            double u_inst[kMaxCh], u_cls[kMaxCh], gu_inst[kMaxCh], gu_cls[kMaxCh];
            double loss_acc = 0;
            const int inst_ch = field.inst_channels();

#pragma omp for schedule(dynamic, 16)
            for (int b = 0; b < n; ++b) {
                const RayObs& ro = batch[b];
                double e_hat;
                int taken = ray_forward(field, ro.ray, ro.jitter, cfg.samples_per_ray, true, wk,
                                        e_hat, u_inst, u_cls);
                bool fg = ro.e > cfg.eta_batch;
                double wr = fg ? w_fg : w_bg;
                double resid = ro.e - e_hat;
                loss_acc += wr * resid * resid / n;
                double g_e = wr * 2.0 * (e_hat - ro.e) / n;
                double sp_coeff = 0.0;
                if (!fg && cfg.lambda_sparsity > 0) {
                    for (int j = 0; j < taken; ++j) {
                        double fv = wk.rec[j].f;
                        loss_acc += cfg.lambda_sparsity * sparsity_norm *
                                    std::log1p(fv * fv / cfg.sparsity_scale);
                    }
                    sp_coeff = cfg.lambda_sparsity * sparsity_norm;
                }

                double w = 0;
                for (int l = 0; l < inst_ch; ++l) w += u_inst[l];
                const double* pg_inst = nullptr;
                const double* pg_cls = nullptr;
                double g_w = 0;
                if (w >= kMinRayWeight) {
                    double p_inst = clampd(u_inst[ro.inst] / w, kProbClamp, 1.0);
                    double wc = 0;
                    for (int l = 0; l < field.n_classes; ++l) wc += u_cls[l];
                    double p_cls = clampd(u_cls[ro.cls] / wc, kProbClamp, 1.0);
                    loss_acc += sem_scale * (-std::log(p_inst) - std::log(p_cls));
                    std::fill(gu_inst, gu_inst + inst_ch, 0.0);
                    std::fill(gu_cls, gu_cls + field.n_classes, 0.0);
                    if (u_inst[ro.inst] / w > kProbClamp) {
                        gu_inst[ro.inst] -= sem_scale / std::max(u_inst[ro.inst], 1e-300);
                        g_w += sem_scale / w;
                    }
                    if (u_cls[ro.cls] / wc > kProbClamp) {
                        gu_cls[ro.cls] -= sem_scale / std::max(u_cls[ro.cls], 1e-300);
                        g_w += sem_scale / wc;
                    }
                    pg_inst = gu_inst;
                    pg_cls = gu_cls;
                } else {
                    loss_acc +=
                        sem_scale * (std::log(double(inst_ch)) + std::log(double(field.n_classes)));
                }
                ray_backward(field, wk, taken, g_e, g_w, pg_inst, pg_cls, sp_coeff,
                             cfg.sparsity_scale, g);
            }
            tloss[tid] = loss_acc;
        }

        double g_alpha = 0;
        double loss = 0;
        for (int t = 0; t < n_threads; ++t) {
            g_alpha += tgrads[t].alpha;
            loss += tloss[t];
        }
        if (!std::isfinite(loss))
            throw FieldDivergence("field optimization diverged (non-finite loss) at iteration " +
                                  std::to_string(iter));
        history.push_back(loss);

        adam_step_fused(field, tgrads, g_alpha, adam, cfg);
    }

    realign();
    if (diag) {
        diag->loss_history = std::move(history);
        diag->alignment = align;
    }
    return field;
}

FieldPair optimize_field(const LabelImageSet& maps, const TrainConfig& cfg,
                         TrainDiagnostics* surface_diag, TrainDiagnostics* curve_diag) {
    FieldPair pair;
    pair.surface = optimize_field_single(maps, CloudSource::Surface, cfg, surface_diag);
    pair.curve = optimize_field_single(maps, CloudSource::Curve, cfg, curve_diag);
    return pair;
}

}  // namespace cylrev
