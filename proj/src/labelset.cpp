#include "cylrev/labelset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cylrev/sketch.hpp"  // ValidationError

namespace cylrev {

using nlohmann::json;
namespace fs = std::filesystem;

int LabelImageSet::max_instance_id() const {
    int k = 0;
    for (const auto& v : views) {
        for (uint8_t p : v.surface_instance.data) k = std::max(k, int(p));
        for (uint8_t p : v.curve_instance.data) k = std::max(k, int(p));
    }
    return k;
}

void LabelImageSet::validate() const {
    for (const auto& v : views) {
        if (v.surface_instance.width != v.camera.width ||
            v.surface_instance.height != v.camera.height)
            throw ValidationError("label map size does not match camera");
        for (size_t i = 0; i < v.surface_instance.data.size(); ++i) {
            if ((v.surface_instance.data[i] == 0) != (v.surface_cls.data[i] == 0))
                throw ValidationError("surface P=0 <=> Q=0 violated");
        }
        for (size_t i = 0; i < v.curve_instance.data.size(); ++i) {
            if ((v.curve_instance.data[i] == 0) != (v.curve_cls.data[i] == 0))
                throw ValidationError("curve P=0 <=> Q=0 violated");
            if (v.curve_cls.data[i] > 2) throw ValidationError("curve class out of range");
        }
        for (uint8_t q : v.surface_cls.data)
            if (q > 3) throw ValidationError("surface class out of range");
    }
}

void save_label_set(const LabelImageSet& set, const std::string& dir,
                    const std::string& manifest_name) {
    fs::create_directories(dir);
    json views = json::array();
    char name[64];
    for (const auto& v : set.views) {
        json entry;
        entry["view_id"] = v.view_id;
        entry["camera"] = camera_to_json(v.camera);
        std::snprintf(name, sizeof(name), "surf_inst_%03d.png", v.view_id);
        entry["surface_instance"] = name;
        save_png_gray(v.surface_instance, dir + "/" + name);
        std::snprintf(name, sizeof(name), "surf_cls_%03d.png", v.view_id);
        entry["surface_cls"] = name;
        save_png_gray(v.surface_cls, dir + "/" + name);
        std::snprintf(name, sizeof(name), "curve_inst_%03d.png", v.view_id);
        entry["curve_instance"] = name;
        save_png_gray(v.curve_instance, dir + "/" + name);
        std::snprintf(name, sizeof(name), "curve_cls_%03d.png", v.view_id);
        entry["curve_cls"] = name;
        save_png_gray(v.curve_cls, dir + "/" + name);
        views.push_back(entry);
    }
    json manifest = {{"schema_version", 1}, {"views", views}};
    std::ofstream f(dir + "/" + manifest_name);
    if (!f) throw std::runtime_error("cannot write manifest in " + dir);
    f << manifest.dump(2) << "\n";
}

LabelImageSet load_label_set(const std::string& dir, const std::string& manifest_name) {
    std::ifstream f(dir + "/" + manifest_name);
    if (!f) throw std::runtime_error("cannot read manifest " + dir + "/" + manifest_name);
    json manifest = json::parse(f);
    LabelImageSet set;
    for (const auto& entry : manifest.at("views")) {
        ViewLabels v;
        v.view_id = entry.at("view_id").get<int>();
        v.camera = camera_from_json(entry.at("camera"));
        v.surface_instance = load_png_gray(dir + "/" + entry.at("surface_instance").get<std::string>());
        v.surface_cls = load_png_gray(dir + "/" + entry.at("surface_cls").get<std::string>());
        v.curve_instance = load_png_gray(dir + "/" + entry.at("curve_instance").get<std::string>());
        v.curve_cls = load_png_gray(dir + "/" + entry.at("curve_cls").get<std::string>());
        set.views.push_back(std::move(v));
    }
    return set;
}

}  // namespace cylrev
