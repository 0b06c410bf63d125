#include "cylrev/extract.hpp"

#include <omp.h>

#include <map>

#include "cylrev/sketch.hpp"  // ValidationError

namespace cylrev {

LabeledPointCloud extract_points(const VoxelField& field, double tau, int grid_res,
                                 ExtractReport* report, int threads, int min_points) {
    if (!(tau > 0.0 && tau <= 1.0)) throw ValidationError("extraction tau must be in (0,1]");
    if (grid_res < 2) throw ValidationError("extraction grid resolution too small");

    // sigma/alpha > tau is a pure threshold on the interpolated density.
    const double f_threshold =
        field.beta - std::log(1.0 / tau - 1.0) / field.zeta;

    const int inst_ch = field.inst_channels();
    std::vector<LabeledPointCloud> slabs(grid_res);

#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, threads))
    for (int iz = 0; iz < grid_res; ++iz) {
        LabeledPointCloud& out = slabs[iz];
        std::vector<double> logits(std::max(inst_ch, field.n_classes));
        double z = -1.0 + 2.0 * iz / (grid_res - 1);
        for (int iy = 0; iy < grid_res; ++iy) {
            double y = -1.0 + 2.0 * iy / (grid_res - 1);
            for (int ix = 0; ix < grid_res; ++ix) {
                double x = -1.0 + 2.0 * ix / (grid_res - 1);
                Vec3 p{x, y, z};
                VoxelField::Cell cell = field.locate(p);
                if (!cell.ok) continue;
                double fv = 0;
                for (int c = 0; c < 8; ++c) fv += cell.w[c] * field.density[cell.corner[c]];
                if (fv <= f_threshold) continue;
                field.inst_logits_at(cell, logits.data());
                int bi = 0;
                for (int l = 1; l < inst_ch; ++l)
                    if (logits[l] > logits[bi]) bi = l;
                if (bi == 0) continue;  // background argmax
                field.cls_logits_at(cell, logits.data());
                int bc = 0;
                for (int l = 1; l < field.n_classes; ++l)
                    if (logits[l] > logits[bc]) bc = l;
                if (bc == 0) continue;
                out.push(p, static_cast<uint8_t>(bi), static_cast<uint8_t>(bc));
            }
        }
    }

    LabeledPointCloud merged;
    merged.source = field.kind;
    for (const auto& s : slabs)
        for (size_t i = 0; i < s.size(); ++i) merged.push(s.points[i], s.instance[i], s.cls[i]);

    // Drop instances that are too sparse to reconstruct.
    std::map<int, int> counts;
    for (uint8_t id : merged.instance) counts[id]++;
    std::vector<bool> drop(field.inst_channels() + 1, false);
    ExtractReport rep;
    for (const auto& [id, n] : counts) {
        if (n < min_points) {
            drop[id] = true;
            rep.dropped_instances.push_back(id);
        }
    }
    LabeledPointCloud final_cloud;
    final_cloud.source = field.kind;
    for (size_t i = 0; i < merged.size(); ++i)
        if (!drop[merged.instance[i]])
            final_cloud.push(merged.points[i], merged.instance[i], merged.cls[i]);
    rep.kept_points = static_cast<int>(final_cloud.size());
    if (report) *report = rep;
    return final_cloud;
}

}  // namespace cylrev
