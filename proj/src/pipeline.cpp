#include "cylrev/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "cylrev/extract.hpp"
#include "cylrev/field_train.hpp"
#include "cylrev/labelset.hpp"
#include "cylrev/model_json.hpp"
#include "cylrev/nn_index.hpp"
#include "cylrev/render.hpp"
#include "cylrev/rng.hpp"
#include "cylrev/sample.hpp"

namespace cylrev {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string out_dir(const PipelineConfig& cfg) {
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    const char* env = std::getenv("CYLREV_OUT");
    if (env && *env) return env;
    throw ConfigError("no output directory: pass --out or set CYLREV_OUT");
}

void write_manifest(const PipelineConfig& cfg, const std::string& stage,
                    json extra = json::object()) {
    json m = {{"schema_version", 1},
              {"stage", stage},
              {"version", kVersion},
              {"seed", cfg.seed},
              {"config_hash", config_hash(cfg)},
              {"config", config_to_json(cfg)}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream f(out_dir(cfg) + "/manifest_" + stage + ".json");
    if (!f) throw StageError("cannot write manifest for stage " + stage);
    f << m.dump(2) << "\n";
}

void require_input(const std::string& path, const std::string& stage) {
    if (!fs::exists(path))
        throw StageError("missing input for stage " + stage + ": " + path);
}

std::vector<ExtrusionEstimate> estimates_from_json(const json& j);

}  // namespace

void stage_generate(const PipelineConfig& cfg) {
    const std::string dir = out_dir(cfg);
    fs::create_directories(dir);
    CadModel model = generate_random_model(cfg.seed, cfg.k, cfg.generator);
    save_model(model, dir + "/model.json");
    write_manifest(cfg, "generate", {{"outputs", {"model.json"}}});
}

void stage_render(const PipelineConfig& cfg) {
    const std::string dir = out_dir(cfg);
    require_input(dir + "/model.json", "render");
    CadModel model = load_model(dir + "/model.json");

    auto cams = fibonacci_views(cfg.views, cfg.cam_radius, cfg.resolution, cfg.resolution,
                                cfg.fov_deg);
    LabelImageSet set;
    const int threads = cfg.effective_threads();
    for (size_t i = 0; i < cams.size(); ++i) {
        ViewLabels v;
        v.view_id = static_cast<int>(i);
        v.camera = cams[i];
        SurfaceRender s = render_surface_labels(model, cams[i], threads);
        CurveRender c = render_curve_labels(model, cams[i], cfg.line_width, threads);
        v.surface_instance = std::move(s.instance);
        v.surface_cls = std::move(s.cls);
        v.curve_instance = std::move(c.instance);
        v.curve_cls = std::move(c.cls);
        set.views.push_back(std::move(v));
    }
    bool noisy = cfg.noise.flip_prob > 0 || cfg.noise.permute_instances ||
                 cfg.noise.dropout_prob > 0;
    if (noisy) {
        NoiseSpec spec = cfg.noise;
        if (spec.seed == 0) spec.seed = hash_combine(cfg.seed, 0x401e);
        set = inject_label_noise(set, spec);
    }
    save_label_set(set, dir + "/views");
    write_manifest(cfg, "render",
                   {{"views", cfg.views}, {"resolution", cfg.resolution}, {"noisy", noisy}});
}

void stage_fit(const PipelineConfig& cfg) {
    const std::string dir = out_dir(cfg);
    require_input(dir + "/views/views.json", "fit");
    LabelImageSet set = load_label_set(dir + "/views");

    TrainConfig tc = cfg.train;
    tc.threads = cfg.effective_threads();
    tc.seed = hash_combine(cfg.seed, 0xf17);
    TrainDiagnostics sdiag, cdiag;
    FieldPair pair = optimize_field(set, tc, &sdiag, &cdiag);
    fs::create_directories(dir + "/fields");
    save_field_pair(pair, dir + "/fields");

    json diag = {{"surface_final_loss", sdiag.loss_history.empty() ? 0.0
                                                                   : sdiag.loss_history.back()},
                 {"curve_final_loss",
                  cdiag.loss_history.empty() ? 0.0 : cdiag.loss_history.back()},
                 {"surface_loss_history", sdiag.loss_history},
                 {"curve_loss_history", cdiag.loss_history}};
    std::ofstream f(dir + "/fields/train_diagnostics.json");
    f << diag.dump() << "\n";
    write_manifest(cfg, "fit", {{"iterations", tc.iterations}});
}

namespace {

json estimate_to_json(const ExtrusionEstimate& e, BoolOp op) {
    ExtrusionCylinder cyl = e.to_cylinder(op);
    json j = cylinder_to_json(cyl);
    // The metric center is the estimate's own; the solid uses the anchored one.
    j["center"] = {e.center.x, e.center.y, e.center.z};
    j["height"] = e.height;
    j["provenance"] = {{"axis_from", e.provenance.axis_from},
                       {"hc_from", e.provenance.hc_from}};
    return j;
}

std::vector<ExtrusionEstimate> estimates_from_json(const json& j) {
    std::vector<ExtrusionEstimate> out;
    for (const auto& jc : j.at("cylinders")) {
        ExtrusionCylinder cyl = cylinder_from_json(jc);
        ExtrusionEstimate e;
        e.axis = cyl.axis;
        e.center = cyl.center;
        e.height = cyl.height;
        e.scale = cyl.scale;
        for (const auto& loop : cyl.sketch.loops()) e.loops.push_back(loop);
        if (jc.contains("provenance")) {
            e.provenance.axis_from = jc.at("provenance").at("axis_from").get<std::string>();
            e.provenance.hc_from = jc.at("provenance").at("hc_from").get<std::string>();
        }
        out.push_back(std::move(e));
    }
    return out;
}

void dump_sketch_grid(const SketchGrid& grid, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    uint32_t g = grid.res;
    f.write(reinterpret_cast<const char*>(&g), sizeof(g));
    std::vector<float> vals(grid.values.begin(), grid.values.end());
    f.write(reinterpret_cast<const char*>(vals.data()),
            static_cast<std::streamsize>(vals.size() * sizeof(float)));
}

}  // namespace

void stage_reconstruct(const PipelineConfig& cfg) {
    const std::string dir = out_dir(cfg);
    require_input(dir + "/fields/surface.field", "reconstruct");
    require_input(dir + "/views/views.json", "reconstruct");
    FieldPair fields = load_field_pair(dir + "/fields");
    LabelImageSet set = load_label_set(dir + "/views");

    RevengConfig rc = cfg.recon;
    rc.threads = cfg.effective_threads();
    rc.seed = hash_combine(cfg.seed, 0x4ec);

    // Clouds are persisted for the consistency metrics and for inspection.
    LabeledPointCloud surf =
        extract_points(fields.surface, rc.extract_tau, rc.extract_grid, nullptr, rc.threads);
    LabeledPointCloud curve =
        extract_points(fields.curve, rc.extract_tau, rc.extract_grid, nullptr, rc.threads);
    fs::create_directories(dir + "/clouds");
    save_ply(surf, dir + "/clouds/surface.ply");
    save_ply(curve, dir + "/clouds/curve.ply");

    ReconstructionResult recon = reconstruct_from_clouds(surf, curve, rc);

    // Binary ops from the observed silhouettes.
    std::vector<LabelImage> silhouettes;
    std::vector<Camera> cams;
    for (const auto& v : set.views) {
        LabelImage sil(v.surface_instance.height, v.surface_instance.width, 0);
        for (size_t i = 0; i < sil.data.size(); ++i)
            sil.data[i] = v.surface_instance.data[i] != 0;
        silhouettes.push_back(std::move(sil));
        cams.push_back(v.camera);
    }
    BinaryOpSearchResult ops =
        search_binary_ops(recon.estimates, silhouettes, cams, rc.threads);

    fs::create_directories(dir + "/recon");
    json cylinders = json::array();
    for (size_t i = 0; i < recon.estimates.size(); ++i)
        cylinders.push_back(estimate_to_json(recon.estimates[i], ops.ops[i]));
    json out = {{"schema_version", 1},
                {"cylinders", cylinders},
                {"missed_instances", recon.missed_instances},
                {"binary_op_score", ops.best_score},
                {"binary_op_candidates", ops.candidates_evaluated}};
    std::ofstream f(dir + "/recon/estimates.json");
    if (!f) throw StageError("cannot write estimates.json");
    f << out.dump(2) << "\n";

    if (cfg.dump_sketch_grids) {
        for (size_t i = 0; i < recon.estimates.size(); ++i)
            dump_sketch_grid(recon.estimates[i].sketch_grid,
                             dir + "/recon/sketch_grid_" + std::to_string(i) + ".f32");
    }
    write_manifest(cfg, "reconstruct",
                   {{"estimates", recon.estimates.size()},
                    {"missed", recon.missed_instances.size()}});
}

MetricsReport stage_evaluate(const PipelineConfig& cfg) {
    const std::string dir = out_dir(cfg);
    require_input(dir + "/model.json", "evaluate");
    require_input(dir + "/recon/estimates.json", "evaluate");
    CadModel gt = load_model(dir + "/model.json");

    std::ifstream ef(dir + "/recon/estimates.json");
    json ej = json::parse(ef);
    std::vector<ExtrusionEstimate> estimates = estimates_from_json(ej);
    std::vector<BoolOp> ops;
    for (const auto& jc : ej.at("cylinders"))
        ops.push_back(jc.at("op").get<std::string>() == "difference" ? BoolOp::Difference
                                                                     : BoolOp::Union);

    const int threads = cfg.effective_threads();
    uint64_t seed = hash_combine(cfg.seed, 0xe7a1);

    MetricsReport rep;
    rep.n_gt = static_cast<int>(gt.cylinders.size());
    rep.n_pred = static_cast<int>(estimates.size());
    InstanceMatching matching = match_instances(gt, estimates, 1024, seed, threads);
    rep.matched = matching.matched;
    rep.missed = matching.missed + static_cast<int>(ej.at("missed_instances").size());
    ParamErrors pe = param_errors(gt, estimates, matching);
    rep.ea_deg = pe.ea_deg;
    rep.ec = pe.ec;
    rep.eh = pe.eh;
    FittingLosses fl = fitting_losses(gt, estimates, matching, 4096, seed, threads);
    rep.fit_cyl = fl.fit_cyl;
    rep.fit_glob = fl.fit_glob;

    // Whole-model chamfer with the searched boolean ops.
    CadModel pred_model;
    for (size_t i = 0; i < estimates.size(); ++i)
        pred_model.cylinders.push_back(estimates[i].to_cylinder(ops[i]));
    if (!pred_model.cylinders.empty() && pred_model.cylinders[0].op == BoolOp::Difference)
        pred_model.cylinders[0].op = BoolOp::Union;
    try {
        LabeledPointCloud a = sample_surface(gt, cfg.eval_samples, hash_combine(seed, 1));
        LabeledPointCloud b = sample_surface(pred_model, cfg.eval_samples, hash_combine(seed, 2));
        rep.chamfer = chamfer(a.points, b.points, true, threads);
    } catch (const std::runtime_error&) {
        rep.chamfer = std::numeric_limits<double>::infinity();
    }

    if (fs::exists(dir + "/clouds/surface.ply") && fs::exists(dir + "/clouds/curve.ply")) {
        LabeledPointCloud surf = load_ply(dir + "/clouds/surface.ply");
        LabeledPointCloud curve = load_ply(dir + "/clouds/curve.ply");
        ConsistencyReport cr = consistency_report(surf, curve, threads);
        rep.counts_equal = cr.counts_equal;
        rep.curve_to_surface_chamfer = cr.one_way_chamfer;
    }

    fs::create_directories(dir + "/eval");
    std::ofstream mf(dir + "/eval/metrics.json");
    mf << rep.to_json().dump(2) << "\n";
    std::ofstream cf(dir + "/eval/metrics.csv");
    cf << MetricsReport::csv_header() << "\n" << rep.csv_row(fs::path(dir).filename().string()) << "\n";
    write_manifest(cfg, "evaluate", {{"matched", rep.matched}});
    return rep;
}

MetricsReport run_full_pipeline(const PipelineConfig& cfg) {
    stage_generate(cfg);
    stage_render(cfg);
    stage_fit(cfg);
    stage_reconstruct(cfg);
    return stage_evaluate(cfg);
}

void stage_ablate(const PipelineConfig& cfg, const std::string& sweep) {
    const std::string dir = out_dir(cfg);
    fs::create_directories(dir);
    std::vector<double> values;
    if (sweep == "views")
        values = {50, 25, 15, 10};
    else if (sweep == "width")
        values = {2.5, 5.0, 7.5};
    else if (sweep == "k")
        values = {1, 2, 3, 4, 5, 6, 7, 8};
    else
        throw ConfigError("unknown ablation sweep: " + sweep + " (views|width|k)");

    std::ofstream csv(dir + "/ablate_" + sweep + ".csv");
    csv << "value,models,ea_deg,ec,eh,fit_cyl,fit_glob,chamfer\n";
    for (double value : values) {
        std::vector<MetricsReport> reports;
        for (int mi = 0; mi < cfg.ablate_models; ++mi) {
            PipelineConfig sub = cfg;
            if (sweep == "views") sub.views = static_cast<int>(value);
            if (sweep == "width") sub.line_width = value;
            if (sweep == "k") sub.k = static_cast<int>(value);
            if (sweep != "k") sub.k = 1 + (mi % 3);
            sub.seed = hash_combine(cfg.seed, mi);
            char name[64];
            std::snprintf(name, sizeof(name), "/ablate_%s/%g/m%02d", sweep.c_str(), value, mi);
            sub.out_dir = dir + name;
            fs::create_directories(sub.out_dir);
            reports.push_back(run_full_pipeline(sub));
        }
        AggregateRow row = aggregate(reports);
        char line[256];
        std::snprintf(line, sizeof(line), "%g,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", value,
                      row.models, row.ea, row.ec, row.eh, row.fit_cyl, row.fit_glob,
                      row.chamfer);
        csv << line;
    }
    write_manifest(cfg, "ablate_" + sweep);
}

void run_stage(const std::string& stage, const PipelineConfig& cfg) {
    if (stage == "generate")
        stage_generate(cfg);
    else if (stage == "render")
        stage_render(cfg);
    else if (stage == "fit")
        stage_fit(cfg);
    else if (stage == "reconstruct")
        stage_reconstruct(cfg);
    else if (stage == "evaluate")
        stage_evaluate(cfg);
    else if (stage == "pipeline")
        run_full_pipeline(cfg);
    else
        throw ConfigError("unknown stage: " + stage);
}

}  // namespace cylrev
