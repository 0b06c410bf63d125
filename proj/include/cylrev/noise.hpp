#pragma once

#include <cstdint>

#include "cylrev/labelset.hpp"

namespace cylrev {

// Parametric corruption standing in for imperfect 2D segmentation priors:
// per-pixel class flips, per-view instance-id permutation, and whole-instance
// dropout. Background is never turned into foreground. All draws are keyed by
// (seed, view, pixel) so results are order-independent and a given surface
// pixel's fate does not depend on unrelated settings such as curve width.
struct NoiseSpec {
    double flip_prob = 0.0;
    bool permute_instances = false;
    double dropout_prob = 0.0;
    uint64_t seed = 0;

    void validate() const;
};

LabelImageSet inject_label_noise(const LabelImageSet& set, const NoiseSpec& spec);

// The instance permutation applied to a given view (index = original id 1..k,
// value = corrupted id). Exposed so tests can invert the corruption.
std::vector<int> noise_view_permutation(const NoiseSpec& spec, int view_id, int k);

}  // namespace cylrev
