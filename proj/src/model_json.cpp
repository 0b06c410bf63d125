#include "cylrev/model_json.hpp"

#include <fstream>

namespace cylrev {

using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json vec2_to_json(const Vec2& v) { return json::array({v.x, v.y}); }

Vec3 vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ValidationError("expected 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec2 vec2_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ValidationError("expected 2-element array");
    return {j[0].get<double>(), j[1].get<double>()};
}

json segment_to_json(const SketchSegment& s) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LineSeg>) {
                return {{"type", "line"}, {"p0", vec2_to_json(v.p0)}, {"p1", vec2_to_json(v.p1)}};
            } else if constexpr (std::is_same_v<T, ArcSeg>) {
                return {{"type", "arc"},
                        {"center", vec2_to_json(v.center)},
                        {"radius", v.radius},
                        {"start_angle", v.start_angle},
                        {"sweep", v.sweep}};
            } else {
                return {{"type", "bezier"},
                        {"p0", vec2_to_json(v.p0)},
                        {"p1", vec2_to_json(v.p1)},
                        {"p2", vec2_to_json(v.p2)},
                        {"p3", vec2_to_json(v.p3)}};
            }
        },
        s);
}

SketchSegment segment_from_json(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "line") {
        return LineSeg{vec2_from_json(j.at("p0")), vec2_from_json(j.at("p1"))};
    } else if (type == "arc") {
        return ArcSeg{vec2_from_json(j.at("center")), j.at("radius").get<double>(),
                      j.at("start_angle").get<double>(), j.at("sweep").get<double>()};
    } else if (type == "bezier") {
        return BezierSeg{vec2_from_json(j.at("p0")), vec2_from_json(j.at("p1")),
                         vec2_from_json(j.at("p2")), vec2_from_json(j.at("p3"))};
    }
    throw ValidationError("unknown sketch segment type: " + type);
}

}  // namespace

json cylinder_to_json(const ExtrusionCylinder& c) {
    json loops = json::array();
    for (const auto& loop : c.sketch.loops()) {
        json segs = json::array();
        for (const auto& s : loop.segments) segs.push_back(segment_to_json(s));
        loops.push_back({{"segments", segs}});
    }
    return {{"axis", vec3_to_json(c.axis)},
            {"center", vec3_to_json(c.center)},
            {"height", c.height},
            {"scale", c.scale},
            {"op", c.op == BoolOp::Union ? "union" : "difference"},
            {"sketch", {{"loops", loops}}}};
}

ExtrusionCylinder cylinder_from_json(const json& j) {
    ExtrusionCylinder c;
    c.axis = vec3_from_json(j.at("axis"));
    c.center = vec3_from_json(j.at("center"));
    c.height = j.at("height").get<double>();
    c.scale = j.at("scale").get<double>();
    std::string op = j.at("op").get<std::string>();
    if (op == "union")
        c.op = BoolOp::Union;
    else if (op == "difference")
        c.op = BoolOp::Difference;
    else
        throw ValidationError("unknown boolean op: " + op);
    std::vector<SketchLoop> loops;
    for (const auto& jl : j.at("sketch").at("loops")) {
        SketchLoop loop;
        for (const auto& js : jl.at("segments")) loop.segments.push_back(segment_from_json(js));
        loops.push_back(std::move(loop));
    }
    c.sketch = SketchProfile(std::move(loops));
    return c;
}

json model_to_json(const CadModel& model) {
    json cyls = json::array();
    for (const auto& c : model.cylinders) cyls.push_back(cylinder_to_json(c));
    return {{"schema_version", 1}, {"cylinders", cyls}};
}

CadModel model_from_json(const json& j) {
    if (j.at("schema_version").get<int>() != 1)
        throw ValidationError("unsupported model schema version");
    CadModel m;
    for (const auto& jc : j.at("cylinders")) m.cylinders.push_back(cylinder_from_json(jc));
    return m;
}

void save_model(const CadModel& model, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << model_to_json(model).dump(2) << "\n";
}

CadModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    json j = json::parse(f);
    return model_from_json(j);
}

}  // namespace cylrev
