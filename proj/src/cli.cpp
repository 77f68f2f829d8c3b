#include "rsfusion/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsfusion/evaluation.hpp"
#include "rsfusion/io.hpp"
#include "rsfusion/pipeline.hpp"

namespace rsfusion {
namespace {

using nlohmann::json;

struct ParamFlags {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::string> criterion, r, T, lambda, gamma_d, window, range;
    bool no_subpixel = false;
    bool no_fill = false;
};

void add_param_flags(CLI::App* app, ParamFlags& f) {
    app->add_option("--config", f.config, "key = value parameter file");
    app->add_option("--set", f.sets, "extra key=value override (repeatable)");
    app->add_option("--criterion", f.criterion, "ecc or emcc");
    app->add_option("--r", f.r, "propagation radius");
    app->add_option("--T", f.T, "energy acceptance threshold");
    app->add_option("--lambda", f.lambda, "prior term weight");
    app->add_option("--gamma-d", f.gamma_d, "depth-consistency bandwidth");
    app->add_option("--window", f.window, "odd window side length");
    app->add_option("--range", f.range, "disparity search range dmin:dmax");
    app->add_flag("--no-subpixel", f.no_subpixel, "disable subpixel correction");
    app->add_flag("--no-fill", f.no_fill, "skip post-filling");
}

FusionParams resolve_params(const ParamFlags& f) {
    FusionParams p = f.config.empty() ? FusionParams{} : load_params_file(f.config);
    for (const auto& kv : f.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(kv, "--set expects key=value, got '" + kv + "'");
        apply_param(p, kv.substr(0, eq), kv.substr(eq + 1));
    }
    const std::pair<const std::optional<std::string>*, const char*> flags[] = {
        {&f.criterion, "criterion"}, {&f.r, "r"},           {&f.T, "t"},           {&f.lambda, "lambda"},
        {&f.gamma_d, "gamma_d"},     {&f.window, "window"}, {&f.range, "range"},
    };
    for (const auto& [value, key] : flags) {
        if (*value) apply_param(p, key, **value);
    }
    if (f.no_subpixel) p.subpixel = false;
    if (f.no_fill) p.fill = false;
    p.validate();
    return p;
}

void ensure_parent(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_json(const std::string& path, const json& j) {
    ensure_parent(path);
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << j.dump(2) << '\n';
}

std::size_t count_set(const Mask& m) {
    return static_cast<std::size_t>(std::count_if(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v; }));
}

json energy_histogram(const GrowResult& g, double T) {
    std::vector<double> energies;
    for (std::size_t i = 0; i < g.meta.size(); ++i) {
        if (g.has_value[i]) energies.push_back(g.meta[i].energy);
    }
    constexpr int kBins = 20;
    double hi = std::isfinite(T) ? T : 0.0;
    if (!std::isfinite(T)) {
        for (double e : energies) hi = std::max(hi, e);
    }
    if (hi <= 0.0) hi = 1.0;
    std::vector<double> edges(kBins + 1);
    for (int i = 0; i <= kBins; ++i) edges[static_cast<std::size_t>(i)] = hi * i / kBins;
    std::vector<std::size_t> counts(kBins, 0);
    for (double e : energies) {
        const int b = std::clamp(static_cast<int>(e / hi * kBins), 0, kBins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    return {{"edges", edges}, {"counts", counts}};
}

struct FuseArgs {
    std::string left, right, prior, prior_right, out;
    bool dump_masks = false;
    bool trace = false;
    std::string queue = "heap";
};

int cmd_fuse(const FuseArgs& a, const ParamFlags& pf, std::ostream& out) {
    const FusionParams params = resolve_params(pf);
    const GrayImage left = load_image(a.left);
    const GrayImage right = load_image(a.right);
    const SparsePrior prior = read_sparse_prior(a.prior);
    FuseOptions opts;
    if (!a.prior_right.empty()) opts.prior_right = read_sparse_prior(a.prior_right);
    opts.grow.record_trace = a.trace;
    if (a.queue == "set") {
        opts.grow.queue = QueueKind::OrderedSet;
    } else if (a.queue != "heap") {
        throw ConfigError("queue", "--queue must be heap or set");
    }

    const FuseOutput res = fuse(left, right, prior, params, opts);

    ensure_parent(a.out);
    json outputs;
    outputs["pfm"] = a.out + ".pfm";
    outputs["png"] = a.out + ".png";
    write_pfm(a.out + ".pfm", res.disparity);
    write_disparity_png(a.out + ".png", res.disparity, params.d_min, params.d_max, &res.init.masks.depth_occ);
    if (a.dump_masks) {
        outputs["masks"] = a.out + "_masks.png";
        outputs["entropy"] = a.out + "_entropy.png";
        outputs["initial"] = a.out + "_initial.pfm";
        write_masks_overlay_png(a.out + "_masks.png", left.luma, res.init.masks);
        save_gray_png(a.out + "_entropy.png", res.entropy);
        write_pfm(a.out + "_initial.pfm", res.init.d0_left);
    }
    if (a.trace) {
        outputs["trace"] = a.out + "_trace.csv";
        std::ofstream os(a.out + "_trace.csv");
        if (!os) throw IoError("cannot open " + a.out + "_trace.csv for writing");
        write_trace_csv(os, res.growth.trace, left.width());
    }

    double total = 0.0;
    json runtime;
    for (const auto& [stage, s] : res.seconds) {
        runtime[stage] = s;
        total += s;
    }
    runtime["total"] = total;

    json stats;
    stats["schema_version"] = kStatsSchemaVersion;
    stats["command"] = "fuse";
    stats["inputs"] = {{"left", a.left}, {"right", a.right}, {"prior", a.prior}};
    if (!a.prior_right.empty()) stats["inputs"]["prior_right"] = a.prior_right;
    stats["image"] = {{"width", left.width()}, {"height", left.height()}};
    stats["params"] = to_json(params);
    stats["prior"] = {{"entries", prior.size()},
                      {"kept", res.init.refined_left.size()},
                      {"removed", res.init.removed.size()}};
    stats["masks"] = {{"stereo_occluded", count_set(res.init.masks.stereo_occ)},
                      {"depth_occluded", count_set(res.init.masks.depth_occ)}};
    stats["growth"] = {{"pops", res.growth.stats.pops},
                       {"seeds_used", res.growth.stats.seeds_used},
                       {"seeds_dropped", res.growth.stats.seeds_dropped},
                       {"assigned", res.growth.stats.assigned},
                       {"rejected", res.growth.stats.rejected}};
    stats["density"] = {{"grown", res.grown.density()}, {"final", res.disparity.density()}};
    stats["fill"] = {{"filter", res.filter_filled}, {"streak", res.streak_filled}};
    stats["energy_histogram"] = energy_histogram(res.growth, params.T);
    stats["runtime_seconds"] = runtime;
    stats["outputs"] = outputs;
    write_json(a.out + ".json", stats);

    out << "density " << res.grown.density() * 100.0 << "% grown, " << res.disparity.density() * 100.0
        << "% final; " << total << " s\n";
    return kExitOk;
}

struct SimulateArgs {
    std::string scene = "two_planes";
    std::string gt;
    std::string out;
    DegradeConfig degrade;
    std::uint64_t seed = 1;
    std::optional<std::string> range;
};

SparsePrior clamp_prior(SparsePrior prior, double lo, double hi) {
    for (auto& e : prior.entries) e.disparity = std::clamp(e.disparity, lo, hi);
    return prior;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    std::filesystem::create_directories(a.out);
    const auto file = [&](const char* name) { return (std::filesystem::path(a.out) / name).string(); };

    if (!a.gt.empty()) {
        FusionParams p;
        if (a.range) apply_param(p, "range", *a.range);
        const DisparityField gt = read_pfm(a.gt);
        const SparsePrior prior = clamp_prior(degrade(gt, a.degrade, a.seed), p.d_min, p.d_max);
        write_sparse_prior(file("prior.csv"), prior);
        out << "wrote " << prior.size() << " prior entries to " << file("prior.csv") << '\n';
        return kExitOk;
    }

    SceneSpec spec = builtin_scene(a.scene);
    if (a.range) {
        FusionParams p;
        apply_param(p, "range", *a.range);
        spec.d_min = p.d_min;
        spec.d_max = p.d_max;
    }
    const RenderedScene scene = render_scene(spec);
    const SparsePrior prior = clamp_prior(degrade(scene.gt, a.degrade, a.seed), spec.d_min, spec.d_max);
    save_gray_png(file("left.png"), scene.left.luma, 16);
    save_gray_png(file("right.png"), scene.right.luma, 16);
    write_pfm(file("gt.pfm"), scene.gt);
    write_sparse_prior(file("prior.csv"), prior);
    write_mask_png(file("occlusion.png"), scene.occlusion);
    out << "scene " << spec.name << " " << spec.width << "x" << spec.height << ", range " << spec.d_min << ":"
        << spec.d_max << ", " << prior.size() << " prior entries -> " << a.out << '\n';
    return kExitOk;
}

struct EvalArgs {
    std::string result, gt, occlusion, json_out;
    std::vector<double> deltas{0.5, 1.0, 2.0};
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const DisparityField result = read_pfm(a.result);
    const DisparityField gt = read_pfm(a.gt);
    Mask occ = a.occlusion.empty() ? Mask(gt.width(), gt.height(), 0) : read_mask_png(a.occlusion);

    json j;
    j["schema_version"] = kStatsSchemaVersion;
    j["command"] = "eval";
    j["inputs"] = {{"result", a.result}, {"gt", a.gt}, {"occlusion", a.occlusion}};
    for (double d : a.deltas) {
        char key[32];
        std::snprintf(key, sizeof key, "%g", d);
        j["bmp"][key] = bmp(result, gt, occ, d);
    }
    j["mse"] = mse(result, gt, occ);
    j["result_density"] = result.density();
    if (a.json_out.empty()) {
        out << j.dump(2) << '\n';
    } else {
        write_json(a.json_out, j);
    }
    return kExitOk;
}

struct MasksArgs {
    std::string left, right, prior, prior_right, out;
};

int cmd_masks(const MasksArgs& a, const ParamFlags& pf, std::ostream& out) {
    const FusionParams params = resolve_params(pf);
    const GrayImage left = load_image(a.left);
    const GrayImage right = load_image(a.right);
    const SparsePrior prior = read_sparse_prior(a.prior);
    prior.validate(left.width(), left.height(), params.d_min, params.d_max);
    std::optional<SparsePrior> prior_right;
    if (!a.prior_right.empty()) prior_right = read_sparse_prior(a.prior_right);

    const InitialMaps init = initial_maps(prior, prior_right, left, right, params);
    ensure_parent(a.out);
    write_masks_overlay_png(a.out + "_masks.png", left.luma, init.masks);
    write_mask_png(a.out + "_stereo_occ.png", init.masks.stereo_occ);
    write_mask_png(a.out + "_depth_occ.png", init.masks.depth_occ);
    write_pfm(a.out + "_initial.pfm", init.d0_left);
    write_disparity_png(a.out + "_initial.png", init.d0_left, params.d_min, params.d_max);
    save_gray_png(a.out + "_entropy.png", entropy_field(left.luma, params.window_half));

    json j;
    j["schema_version"] = kStatsSchemaVersion;
    j["command"] = "masks";
    j["stereo_occluded"] = count_set(init.masks.stereo_occ);
    j["depth_occluded"] = count_set(init.masks.depth_occ);
    j["initial_density"] = init.d0_left.density();
    j["prior"] = {{"entries", prior.size()}, {"kept", init.refined_left.size()}, {"removed", init.removed.size()}};
    write_json(a.out + ".json", j);
    out << "stereo-occluded " << j["stereo_occluded"] << ", depth-occluded " << j["depth_occluded"] << '\n';
    return kExitOk;
}

struct ExperimentArgs {
    std::string scene = "two_planes";
    std::string json_out;
    DegradeConfig degrade;
    std::uint64_t seed = 1;
    std::vector<std::string> methods{"fused_ecc", "fused_emcc", "wta", "wta_stereo_only",
                                     "upsample_only", "data_term_only", "simple_fusion"};
    std::vector<double> deltas{0.5, 1.0, 2.0};
};

int cmd_experiment(const ExperimentArgs& a, const ParamFlags& pf, std::ostream& out) {
    FusionParams params = resolve_params(pf);
    const SceneSpec spec = builtin_scene(a.scene);
    if (!pf.range) {
        params.d_min = spec.d_min;
        params.d_max = spec.d_max;
    }
    std::vector<Method> methods;
    for (const auto& m : a.methods) {
        try {
            methods.push_back(method_from_string(m));
        } catch (const std::invalid_argument& e) {
            throw ConfigError("methods", e.what());
        }
    }
    const ExperimentReport report = run_experiment(render_scene(spec), a.degrade, a.seed, params, methods, a.deltas);
    out << report.to_table();
    if (!a.json_out.empty()) {
        json j = report.to_json();
        j["schema_version"] = kStatsSchemaVersion;
        j["params"] = to_json(params);
        write_json(a.json_out, j);
    }
    return kExitOk;
}

void add_degrade_flags(CLI::App* app, DegradeConfig& d, std::uint64_t& seed) {
    app->add_option("--sigma", d.sigma, "prior noise amplitude, pixels")->capture_default_str();
    app->add_option("--factor", d.factor, "prior subsampling factor")->capture_default_str();
    app->add_option("--bias", d.bias, "mean prior bias, pixels")->capture_default_str();
    app->add_option("--period", d.period, "noise wavelength, pixels")->capture_default_str();
    app->add_option("--seed", seed, "random seed")->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Depth/stereo fusion by seeded region growing", "rsfuse"};
    app.require_subcommand(1);

    ParamFlags fuse_params, masks_params, exp_params;

    FuseArgs fa;
    auto* fuse_cmd = app.add_subcommand("fuse", "fuse a rectified stereo pair with a sparse disparity prior");
    fuse_cmd->add_option("--left", fa.left, "left image")->required();
    fuse_cmd->add_option("--right", fa.right, "right image")->required();
    fuse_cmd->add_option("--prior", fa.prior, "sparse prior (CSV x,y,d or PFM)")->required();
    fuse_cmd->add_option("--prior-right", fa.prior_right, "right-view sparse prior (default: mirrored)");
    fuse_cmd->add_option("--out", fa.out, "output prefix (.pfm, .png, .json)")->required();
    fuse_cmd->add_flag("--dump-masks", fa.dump_masks, "also write occlusion masks, entropy and initial map");
    fuse_cmd->add_flag("--trace", fa.trace, "write the growth trace as CSV");
    fuse_cmd->add_option("--queue", fa.queue, "priority structure: heap or set")->capture_default_str();
    add_param_flags(fuse_cmd, fuse_params);

    SimulateArgs sa;
    auto* sim_cmd = app.add_subcommand("simulate", "render a built-in scene and a degraded prior");
    sim_cmd->add_option("--scene", sa.scene, "built-in scene name")->capture_default_str();
    sim_cmd->add_option("--gt", sa.gt, "degrade this ground-truth PFM instead of rendering a scene");
    sim_cmd->add_option("--out", sa.out, "output directory")->required();
    sim_cmd->add_option("--range", sa.range, "clamp prior to dmin:dmax");
    add_degrade_flags(sim_cmd, sa.degrade, sa.seed);

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "bad-pixel percentage and MSE against ground truth");
    eval_cmd->add_option("--result", ea.result, "disparity PFM")->required();
    eval_cmd->add_option("--gt", ea.gt, "ground-truth PFM")->required();
    eval_cmd->add_option("--occlusion", ea.occlusion, "occlusion mask PNG (non-zero = excluded)");
    eval_cmd->add_option("--delta", ea.deltas, "error thresholds")->delimiter(',')->capture_default_str();
    eval_cmd->add_option("--json", ea.json_out, "write the report here instead of stdout");

    MasksArgs ma;
    auto* masks_cmd = app.add_subcommand("masks", "initial maps and occlusion masks only");
    masks_cmd->add_option("--left", ma.left, "left image")->required();
    masks_cmd->add_option("--right", ma.right, "right image")->required();
    masks_cmd->add_option("--prior", ma.prior, "sparse prior")->required();
    masks_cmd->add_option("--prior-right", ma.prior_right, "right-view sparse prior");
    masks_cmd->add_option("--out", ma.out, "output prefix")->required();
    add_param_flags(masks_cmd, masks_params);

    ExperimentArgs xa;
    auto* exp_cmd = app.add_subcommand("experiment", "compare methods on a built-in scene");
    exp_cmd->add_option("--scene", xa.scene, "built-in scene name")->capture_default_str();
    exp_cmd->add_option("--methods", xa.methods, "methods to run")->delimiter(',');
    exp_cmd->add_option("--delta", xa.deltas, "error thresholds")->delimiter(',');
    exp_cmd->add_option("--json", xa.json_out, "write the report as JSON");
    add_degrade_flags(exp_cmd, xa.degrade, xa.seed);
    add_param_flags(exp_cmd, exp_params);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*fuse_cmd) return cmd_fuse(fa, fuse_params, out);
        if (*sim_cmd) return cmd_simulate(sa, out);
        if (*eval_cmd) return cmd_eval(ea, out);
        if (*masks_cmd) return cmd_masks(ma, masks_params, out);
        if (*exp_cmd) return cmd_experiment(xa, exp_params, out);
    } catch (const ConfigError& e) {
        err << "config error (" << e.field() << "): " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}

}  // namespace rsfusion
