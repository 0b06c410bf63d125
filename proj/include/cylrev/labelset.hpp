#pragma once

#include <string>
#include <vector>

#include "cylrev/camera.hpp"
#include "cylrev/image.hpp"

namespace cylrev {

// One view's surface/curve label maps plus the camera that produced them.
struct ViewLabels {
    int view_id = 0;
    Camera camera;
    LabelImage surface_instance;  // 0..K
    LabelImage surface_cls;       // 0=bg 1=start 2=end 3=barrel
    LabelImage curve_instance;    // 0..K
    LabelImage curve_cls;         // 0=bg 1=start 2=end
};

struct LabelImageSet {
    std::vector<ViewLabels> views;

    int max_instance_id() const;
    void validate() const;  // P=0 <=> Q=0, ids within range
};

// On-disk layout: one manifest JSON plus 8-bit PNGs per view.
void save_label_set(const LabelImageSet& set, const std::string& dir,
                    const std::string& manifest_name = "views.json");
LabelImageSet load_label_set(const std::string& dir,
                             const std::string& manifest_name = "views.json");

}  // namespace cylrev
