#include "cylrev/noise.hpp"

#include <numeric>

#include "cylrev/rng.hpp"
#include "cylrev/sketch.hpp"  // ValidationError

namespace cylrev {

void NoiseSpec::validate() const {
    if (flip_prob < 0 || flip_prob > 1) throw ValidationError("flip_prob out of [0,1]");
    if (dropout_prob < 0 || dropout_prob > 1) throw ValidationError("dropout_prob out of [0,1]");
}

std::vector<int> noise_view_permutation(const NoiseSpec& spec, int view_id, int k) {
    std::vector<int> perm(k + 1);
    std::iota(perm.begin(), perm.end(), 0);
    if (!spec.permute_instances) return perm;
    Rng rng(spec.seed, hash_combine(0x9e21, view_id));
    for (int i = k; i > 1; --i) {  // Fisher-Yates over ids 1..k
        int j = 1 + static_cast<int>(rng.next_below(static_cast<uint32_t>(i)));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

LabelImageSet inject_label_noise(const LabelImageSet& set, const NoiseSpec& spec) {
    spec.validate();
    const int k = set.max_instance_id();
    LabelImageSet out = set;
    for (auto& v : out.views) {
        auto perm = noise_view_permutation(spec, v.view_id, k);
        // One dropout decision per (view, instance), shared by surface and
        // curve maps of the view.
        std::vector<bool> dropped(k + 1, false);
        for (int id = 1; id <= k; ++id) {
            Rng rng(spec.seed, hash_combine(0xd709, hash_combine(v.view_id, id)));
            dropped[id] = rng.bernoulli(spec.dropout_prob);
        }

        auto corrupt = [&](LabelImage& inst, LabelImage& cls, int n_classes, uint64_t salt) {
            for (int r = 0; r < inst.height; ++r) {
                for (int c = 0; c < inst.width; ++c) {
                    uint8_t id = inst.at(r, c);
                    if (id == 0) continue;
                    if (dropped[id]) {
                        inst.at(r, c) = 0;
                        cls.at(r, c) = 0;
                        continue;
                    }
                    inst.at(r, c) = static_cast<uint8_t>(perm[id]);
                    Rng rng(spec.seed,
                            hash_combine(salt, hash_combine(v.view_id,
                                                            (uint64_t(r) << 20) | uint64_t(c))));
                    if (rng.bernoulli(spec.flip_prob)) {
                        // Reassign to a uniformly random *other* foreground class.
                        int cur = cls.at(r, c);
                        int pick = 1 + static_cast<int>(rng.next_below(n_classes - 1));
                        if (pick >= cur) ++pick;
                        cls.at(r, c) = static_cast<uint8_t>(pick);
                    }
                }
            }
        };
        corrupt(v.surface_instance, v.surface_cls, 3, 0xf1a0);  // classes 1..3
        corrupt(v.curve_instance, v.curve_cls, 2, 0xf1a1);      // classes 1..2
    }
    return out;
}

}  // namespace cylrev
