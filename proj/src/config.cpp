#include "cylrev/config.hpp"

#include <omp.h>

#include <fstream>
#include <set>

namespace cylrev {

using nlohmann::json;

namespace {

// Rejects keys that no reader consumed.
class StrictObject {
  public:
    StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError("expected an object at " + path_);
    }
    ~StrictObject() = default;

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError("bad value for " + path_ + "." + key + ": " + e.what());
        }
    }
    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key))
                throw ConfigError("unknown config key: " + path_ + "." + key);
        }
    }

  private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

int PipelineConfig::effective_threads() const {
    return threads > 0 ? threads : omp_get_max_threads();
}

void PipelineConfig::apply_preset(const std::string& name) {
    if (name == "desk") {
        resolution = 200;
        train.samples_per_ray = 128;
        train.field_resolution = 64;
        recon.extract_grid = 128;
    } else if (name == "paper") {
        resolution = 400;
        train.samples_per_ray = 256;
        train.field_resolution = 64;
        recon.extract_grid = 400;
    } else {
        throw ConfigError("unknown preset: " + name + " (expected desk or paper)");
    }
    preset = name;
}

void PipelineConfig::validate() const {
    if (k < 1 || k > kMaxInstances) throw ConfigError("k must be in 1..8");
    if (views < 1) throw ConfigError("views must be >= 1");
    if (resolution < 16) throw ConfigError("resolution too small");
    if (line_width <= 0) throw ConfigError("line_width must be positive");
    if (cam_radius <= std::sqrt(3.0)) throw ConfigError("camera radius must exceed sqrt(3)");
    if (eval_samples < 16) throw ConfigError("eval_samples too small");
    if (ablate_models < 1) throw ConfigError("ablate_models must be >= 1");
    try {
        noise.validate();
        train.validate();
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    if (!(recon.extract_tau > 0 && recon.extract_tau <= 1))
        throw ConfigError("extraction tau must be in (0,1]");
    if (recon.extract_grid < 8 || recon.sketch_grid_res < 16)
        throw ConfigError("extraction/sketch grid too small");
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    StrictObject root(j, "config");

    std::string preset = cfg.preset;
    root.read("preset", preset);
    cfg.apply_preset(preset);

    root.read("seed", cfg.seed);
    root.read("threads", cfg.threads);
    root.read("out", cfg.out_dir);
    root.read("k", cfg.k);
    root.read("views", cfg.views);
    root.read("resolution", cfg.resolution);
    root.read("line_width", cfg.line_width);
    root.read("fov_deg", cfg.fov_deg);
    root.read("cam_radius", cfg.cam_radius);
    root.read("eval_samples", cfg.eval_samples);
    root.read("ablate_models", cfg.ablate_models);
    root.read("dump_sketch_grids", cfg.dump_sketch_grids);

    if (const json* g = root.child("generator")) {
        StrictObject o(*g, "config.generator");
        o.read("axis_canonical_prob", cfg.generator.axis_canonical_prob);
        o.read("difference_prob", cfg.generator.difference_prob);
        o.read("min_height", cfg.generator.min_height);
        o.read("max_height", cfg.generator.max_height);
        o.read("min_scale", cfg.generator.min_scale);
        o.read("max_scale", cfg.generator.max_scale);
        o.read("center_range", cfg.generator.center_range);
        o.read("fit_margin", cfg.generator.fit_margin);
        o.read("min_instance_frac", cfg.generator.min_instance_frac);
        o.read("max_attempts", cfg.generator.max_attempts);
        o.finish();
    }
    if (const json* n = root.child("noise")) {
        StrictObject o(*n, "config.noise");
        o.read("flip_prob", cfg.noise.flip_prob);
        o.read("permute_instances", cfg.noise.permute_instances);
        o.read("dropout_prob", cfg.noise.dropout_prob);
        o.read("seed", cfg.noise.seed);
        o.finish();
    }
    if (const json* t = root.child("train")) {
        StrictObject o(*t, "config.train");
        o.read("iterations", cfg.train.iterations);
        o.read("ray_batch", cfg.train.ray_batch);
        o.read("samples_per_ray", cfg.train.samples_per_ray);
        o.read("lr_grid", cfg.train.lr_grid);
        o.read("lr_alpha", cfg.train.lr_alpha);
        o.read("lambda_sparsity", cfg.train.lambda_sparsity);
        o.read("sparsity_scale", cfg.train.sparsity_scale);
        o.read("eta_batch", cfg.train.eta_batch);
        o.read("eta_image", cfg.train.eta_image);
        o.read("beta", cfg.train.beta);
        o.read("zeta", cfg.train.zeta);
        o.read("field_resolution", cfg.train.field_resolution);
        o.read("align_every", cfg.train.align_every);
        o.read("align_stride", cfg.train.align_stride);
        o.finish();
    }
    if (const json* r = root.child("recon")) {
        StrictObject o(*r, "config.recon");
        o.read("ransac_iters", cfg.recon.ransac_iters);
        o.read("ransac_tol", cfg.recon.ransac_tol);
        o.read("min_base_points", cfg.recon.min_base_points);
        o.read("min_curve_points", cfg.recon.min_curve_points);
        o.read("sketch_grid_res", cfg.recon.sketch_grid_res);
        o.read("max_fit_points", cfg.recon.max_fit_points);
        o.read("extract_tau", cfg.recon.extract_tau);
        o.read("extract_grid", cfg.recon.extract_grid);
        o.finish();
    }
    root.finish();
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    // An empty file means all defaults.
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
        PipelineConfig cfg;
        cfg.apply_preset("desk");
        cfg.validate();
        return cfg;
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const PipelineConfig& cfg) {
    return {
        {"preset", cfg.preset},
        {"seed", cfg.seed},
        {"threads", cfg.threads},
        {"out", cfg.out_dir},
        {"k", cfg.k},
        {"views", cfg.views},
        {"resolution", cfg.resolution},
        {"line_width", cfg.line_width},
        {"fov_deg", cfg.fov_deg},
        {"cam_radius", cfg.cam_radius},
        {"eval_samples", cfg.eval_samples},
        {"ablate_models", cfg.ablate_models},
        {"dump_sketch_grids", cfg.dump_sketch_grids},
        {"generator",
         {{"axis_canonical_prob", cfg.generator.axis_canonical_prob},
          {"difference_prob", cfg.generator.difference_prob},
          {"min_height", cfg.generator.min_height},
          {"max_height", cfg.generator.max_height},
          {"min_scale", cfg.generator.min_scale},
          {"max_scale", cfg.generator.max_scale},
          {"center_range", cfg.generator.center_range},
          {"fit_margin", cfg.generator.fit_margin},
          {"min_instance_frac", cfg.generator.min_instance_frac},
          {"max_attempts", cfg.generator.max_attempts}}},
        {"noise",
         {{"flip_prob", cfg.noise.flip_prob},
          {"permute_instances", cfg.noise.permute_instances},
          {"dropout_prob", cfg.noise.dropout_prob},
          {"seed", cfg.noise.seed}}},
        {"train",
         {{"iterations", cfg.train.iterations},
          {"ray_batch", cfg.train.ray_batch},
          {"samples_per_ray", cfg.train.samples_per_ray},
          {"lr_grid", cfg.train.lr_grid},
          {"lr_alpha", cfg.train.lr_alpha},
          {"lambda_sparsity", cfg.train.lambda_sparsity},
          {"sparsity_scale", cfg.train.sparsity_scale},
          {"eta_batch", cfg.train.eta_batch},
          {"eta_image", cfg.train.eta_image},
          {"beta", cfg.train.beta},
          {"zeta", cfg.train.zeta},
          {"field_resolution", cfg.train.field_resolution},
          {"align_every", cfg.train.align_every},
          {"align_stride", cfg.train.align_stride}}},
        {"recon",
         {{"ransac_iters", cfg.recon.ransac_iters},
          {"ransac_tol", cfg.recon.ransac_tol},
          {"min_base_points", cfg.recon.min_base_points},
          {"min_curve_points", cfg.recon.min_curve_points},
          {"sketch_grid_res", cfg.recon.sketch_grid_res},
          {"max_fit_points", cfg.recon.max_fit_points},
          {"extract_tau", cfg.recon.extract_tau},
          {"extract_grid", cfg.recon.extract_grid}}},
    };
}

std::string config_hash(const PipelineConfig& cfg) {
    std::string dump = config_to_json(cfg).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace cylrev
