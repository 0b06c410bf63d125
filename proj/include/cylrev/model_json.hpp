#pragma once

#include <string>

#include <json.hpp>

#include "cylrev/model.hpp"

namespace cylrev {

// Reconstruction provenance, carried alongside estimated cylinders.
struct Provenance {
    std::string axis_from = "surface";  // "surface" | "curve_fallback"
    std::string hc_from = "curve";      // "curve" | "barrel_fallback"
};

nlohmann::json model_to_json(const CadModel& model);
CadModel model_from_json(const nlohmann::json& j);

nlohmann::json cylinder_to_json(const ExtrusionCylinder& c);
ExtrusionCylinder cylinder_from_json(const nlohmann::json& j);

void save_model(const CadModel& model, const std::string& path);
CadModel load_model(const std::string& path);

}  // namespace cylrev
