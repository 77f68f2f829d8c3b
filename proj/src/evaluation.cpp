#include "rsfusion/evaluation.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "rsfusion/energy.hpp"
#include "rsfusion/growing.hpp"
#include "rsfusion/initialization.hpp"
#include "rsfusion/pipeline.hpp"

namespace rsfusion {
namespace {

void check_same_shape(const DisparityField& result, const DisparityField& gt, const Mask& occlusion) {
    if (result.width() != gt.width() || result.height() != gt.height() || !occlusion.same_shape(gt.width(), gt.height())) {
        throw std::invalid_argument("result, ground truth and occlusion mask must have the same dimensions");
    }
}

bool evaluated(const DisparityField& gt, const Mask& occlusion, std::size_t i) {
    return gt.valid(i) && occlusion[i] == 0;
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double lattice(long long ix, long long iy, std::uint64_t seed) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
    h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Catmull-Rom weights for the four samples around fractional offset f.
std::array<double, 4> cubic_weights(double f) {
    const double f2 = f * f, f3 = f2 * f;
    return {0.5 * (-f3 + 2 * f2 - f), 0.5 * (3 * f3 - 5 * f2 + 2), 0.5 * (-3 * f3 + 4 * f2 + f), 0.5 * (f3 - f2)};
}

double value_noise(double u, double v, std::uint64_t seed) {
    const double fu = std::floor(u), fv = std::floor(v);
    const auto wu = cubic_weights(u - fu), wv = cubic_weights(v - fv);
    const auto iu = static_cast<long long>(fu), iv = static_cast<long long>(fv);
    double acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        double row = 0.0;
        for (int i = 0; i < 4; ++i) row += wu[static_cast<std::size_t>(i)] * lattice(iu + i - 1, iv + j - 1, seed);
        acc += wv[static_cast<std::size_t>(j)] * row;
    }
    return acc;
}

std::string format_delta(double d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", d);
    return buf;
}

}  // namespace

double bmp(const DisparityField& result, const DisparityField& gt, const Mask& occlusion, double delta) {
    check_same_shape(result, gt, occlusion);
    std::size_t n = 0, bad = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!evaluated(gt, occlusion, i)) continue;
        ++n;
        if (!result.valid(i) || std::abs(static_cast<double>(result.value(i)) - gt.value(i)) > delta) ++bad;
    }
    if (n == 0) throw NoValidPixels();
    return 100.0 * static_cast<double>(bad) / static_cast<double>(n);
}

double mse(const DisparityField& result, const DisparityField& gt, const Mask& occlusion) {
    check_same_shape(result, gt, occlusion);
    std::size_t n = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!evaluated(gt, occlusion, i) || !result.valid(i)) continue;
        const double e = static_cast<double>(result.value(i)) - gt.value(i);
        sum += e * e;
        ++n;
    }
    if (n == 0) throw NoValidPixels();
    return sum / static_cast<double>(n);
}

void DegradeConfig::validate() const {
    if (factor < 1) throw std::invalid_argument("degrade factor must be >= 1");
    if (!(sigma >= 0.0)) throw std::invalid_argument("degrade sigma must be >= 0");
    if (!(period > 0.0)) throw std::invalid_argument("degrade noise period must be > 0");
    if (!std::isfinite(bias)) throw std::invalid_argument("degrade bias must be finite");
}

SparsePrior degrade(const DisparityField& gt, const DegradeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double bias_px = phase(rng), bias_py = phase(rng);
    const double noise_px = phase(rng), noise_py = phase(rng);

    const double two_pi = 2.0 * std::numbers::pi;
    const double w = std::max(gt.width(), 1), h = std::max(gt.height(), 1);
    SparsePrior out;
    for (int y = 0; y < gt.height(); y += cfg.factor) {
        for (int x = 0; x < gt.width(); x += cfg.factor) {
            if (!gt.valid(x, y)) continue;
            const double b = cfg.bias * (1.0 + 0.25 * std::sin(two_pi * x / w + bias_px) * std::sin(two_pi * y / h + bias_py));
            const double n = cfg.sigma * std::sin(two_pi * x / cfg.period + noise_px) *
                             std::sin(two_pi * y / cfg.period + noise_py);
            out.entries.push_back({{x, y}, gt.value(x, y) + b + n});
        }
    }
    return out;
}

double TextureSpec::sample(double u, double v) const {
    double acc = 0.0, norm = 0.0, amp = 1.0, cell = scale;
    for (int k = 0; k < std::max(octaves, 1); ++k) {
        acc += amp * value_noise(u / cell, v / cell, seed + static_cast<std::uint64_t>(k) * 7919u);
        norm += amp;
        amp *= 0.5;
        cell /= 2.2;
    }
    return std::clamp(mean + contrast * (acc / norm - 0.5) * 2.0, 0.0, 1.0);
}

RenderedScene render_scene(const SceneSpec& spec) {
    if (spec.width <= 0 || spec.height <= 0) throw std::invalid_argument("scene dimensions must be positive");
    if (spec.layers.empty()) throw std::invalid_argument("scene has no layers");
    for (const auto& l : spec.layers) {
        if (!(l.x1 > l.x0 && l.y1 > l.y0)) throw std::invalid_argument("scene layer rectangle is empty");
        if (!(1.0 + l.bx > 0.0)) throw std::invalid_argument("scene layer slope must keep 1 + bx > 0");
        if (!(l.texture.scale > 0.0)) throw std::invalid_argument("texture scale must be positive");
    }
    const int w = spec.width, h = spec.height;
    const int nl = static_cast<int>(spec.layers.size());

    RenderedScene out;
    out.spec = spec;
    out.left = GrayImage(Image<float>(w, h));
    out.right = GrayImage(Image<float>(w, h));
    out.gt = DisparityField(w, h);
    out.occlusion = Mask(w, h, 0);

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int top = -1;
            for (int i = 0; i < nl; ++i) {
                const auto& l = spec.layers[static_cast<std::size_t>(i)];
                if (!l.covers(x, y)) continue;
                if (top >= 0 && l.disparity(x, y) < spec.layers[static_cast<std::size_t>(top)].disparity(x, y)) {
                    throw std::invalid_argument("scene layer " + std::to_string(i) + " is in front of layer " +
                                                std::to_string(top) + " but farther away at (" + std::to_string(x) +
                                                "," + std::to_string(y) + ")");
                }
                top = i;
            }
            if (top < 0) {
                out.left.luma(x, y) = 0.5f;
                out.occlusion(x, y) = 1;
                continue;
            }
            const auto& l = spec.layers[static_cast<std::size_t>(top)];
            const double d = l.disparity(x, y);
            out.left.luma(x, y) = static_cast<float>(l.texture.sample(x, y));
            out.gt.set(x, y, d);

            const double xr = x + d;
            bool occluded = xr < 0.0 || xr > w - 1;
            for (int j = top + 1; j < nl && !occluded; ++j) {
                const auto& f = spec.layers[static_cast<std::size_t>(j)];
                const double xl = (xr - f.a - f.by * y) / (1.0 + f.bx);
                if (f.covers(xl, y)) occluded = true;
            }
            out.occlusion(x, y) = occluded ? 1 : 0;
        }
        for (int xr = 0; xr < w; ++xr) {
            float v = 0.5f;
            for (int j = nl - 1; j >= 0; --j) {
                const auto& f = spec.layers[static_cast<std::size_t>(j)];
                const double xl = (xr - f.a - f.by * y) / (1.0 + f.bx);
                if (f.covers(xl, y)) {
                    v = static_cast<float>(f.texture.sample(xl, y));
                    break;
                }
            }
            out.right.luma(xr, y) = v;
        }
    }

    if (spec.image_noise > 0.0) {
        std::mt19937_64 rng(spec.noise_seed);
        std::normal_distribution<double> noise(0.0, spec.image_noise);
        for (auto* img : {&out.left.luma, &out.right.luma}) {
            for (auto& v : img->data()) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
        }
    }
    return out;
}

SceneSpec single_plane_scene(double disparity) {
    SceneSpec s;
    s.name = "single_plane";
    SceneLayer plane;
    plane.x0 = -64;
    plane.x1 = s.width + 64;
    plane.y0 = -16;
    plane.y1 = s.height + 16;
    plane.a = disparity;
    plane.texture = {10.0, 0.4, 0.5, 1, 11};
    s.layers.push_back(plane);
    return s;
}

SceneSpec two_planes_scene() {
    SceneSpec s;
    s.name = "two_planes";
    SceneLayer back;
    back.x0 = -64;
    back.x1 = s.width + 64;
    back.y0 = -16;
    back.y1 = s.height + 16;
    back.a = 6.0;
    back.bx = 0.025;
    back.texture = {10.0, 0.1, 0.45, 2, 21};
    SceneLayer box;
    box.x0 = 110;
    box.x1 = 230;
    box.y0 = 60;
    box.y1 = 180;
    box.a = 22.0;
    box.texture = {8.0, 0.1, 0.6, 2, 37};
    s.layers = {back, box};
    s.image_noise = 0.03;
    s.noise_seed = 5;
    return s;
}

std::vector<std::string> builtin_scene_names() { return {"single_plane", "two_planes"}; }

SceneSpec builtin_scene(const std::string& name) {
    if (name == "single_plane") return single_plane_scene();
    if (name == "two_planes") return two_planes_scene();
    throw std::invalid_argument("unknown scene '" + name + "'");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::FusedECC: return "fused_ecc";
        case Method::FusedEMCC: return "fused_emcc";
        case Method::WTA: return "wta";
        case Method::WTAStereoOnly: return "wta_stereo_only";
        case Method::UpsampleOnly: return "upsample_only";
        case Method::DataTermOnly: return "data_term_only";
        case Method::SimpleFusion: return "simple_fusion";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    for (Method m : {Method::FusedECC, Method::FusedEMCC, Method::WTA, Method::WTAStereoOnly, Method::UpsampleOnly,
                     Method::DataTermOnly, Method::SimpleFusion}) {
        if (to_string(m) == s) return m;
    }
    throw std::invalid_argument("unknown method '" + s + "'");
}

const MethodResult& ExperimentReport::at(Method m) const {
    for (const auto& r : results) {
        if (r.method == m) return r;
    }
    throw std::out_of_range("method " + to_string(m) + " not in report");
}

nlohmann::json ExperimentReport::to_json() const {
    nlohmann::json j;
    j["scene"] = scene;
    j["seed"] = seed;
    j["prior_size"] = prior_size;
    j["deltas"] = deltas;
    auto& arr = j["methods"] = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json m;
        m["method"] = to_string(r.method);
        for (std::size_t k = 0; k < deltas.size(); ++k) m["bmp"][format_delta(deltas[k])] = r.bmp[k];
        m["mse"] = r.mse;
        m["density"] = r.density;
        m["seconds"] = r.seconds;
        arr.push_back(std::move(m));
    }
    return j;
}

std::string ExperimentReport::to_table() const {
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-16s", "method");
    os << buf;
    for (double d : deltas) {
        std::snprintf(buf, sizeof buf, " %10s", ("bmp@" + format_delta(d)).c_str());
        os << buf;
    }
    std::snprintf(buf, sizeof buf, " %10s %10s %10s\n", "mse", "density%", "seconds");
    os << buf;
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%-16s", to_string(r.method).c_str());
        os << buf;
        for (double b : r.bmp) {
            std::snprintf(buf, sizeof buf, " %10.2f", b);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, " %10.3f %10.1f %10.3f\n", r.mse, 100.0 * r.density, r.seconds);
        os << buf;
    }
    return os.str();
}

FusionParams method_params(Method m, const FusionParams& base) {
    FusionParams p = base;
    switch (m) {
        case Method::FusedECC:
            p.criterion = Criterion::ECC;
            p.fusion = FusionMode::Adaptive;
            break;
        case Method::FusedEMCC:
            p.criterion = Criterion::EMCC;
            p.fusion = FusionMode::Adaptive;
            break;
        case Method::WTA:
        case Method::UpsampleOnly:
            break;
        case Method::WTAStereoOnly:
            p.fusion = FusionMode::StereoOnly;
            break;
        case Method::DataTermOnly:
            p.fusion = FusionMode::Fixed;
            p.subpixel = true;
            p.aggregation = true;
            break;
        case Method::SimpleFusion:
            p.fusion = FusionMode::Fixed;
            p.subpixel = false;
            p.aggregation = false;
            break;
    }
    return p;
}

ExperimentReport run_experiment(const RenderedScene& scene, const DegradeConfig& degrade_cfg, std::uint64_t seed,
                                const FusionParams& params, const std::vector<Method>& methods,
                                const std::vector<double>& deltas) {
    params.validate();
    SparsePrior prior = degrade(scene.gt, degrade_cfg, seed);
    for (auto& e : prior.entries) e.disparity = std::clamp<double>(e.disparity, params.d_min, params.d_max);

    ExperimentReport report;
    report.scene = scene.spec.name;
    report.deltas = deltas;
    report.prior_size = prior.size();
    report.seed = seed;

    for (Method m : methods) {
        const FusionParams p = method_params(m, params);
        const auto start = std::chrono::steady_clock::now();
        MethodResult r;
        r.method = m;
        switch (m) {
            case Method::FusedECC:
            case Method::FusedEMCC:
            case Method::DataTermOnly:
            case Method::SimpleFusion: {
                FuseOutput out = fuse(scene.left, scene.right, prior, p);
                r.density = out.grown.density();
                r.disparity = std::move(out.disparity);
                break;
            }
            case Method::WTA:
            case Method::WTAStereoOnly:
            case Method::UpsampleOnly: {
                InitialMaps init = initial_maps(prior, std::nullopt, scene.left, scene.right, p);
                DisparityField raw;
                if (m == Method::UpsampleOnly) {
                    raw = std::move(init.d0_left);
                } else {
                    const EnergyContext ctx =
                        EnergyContext::create(scene.left.luma, scene.right.luma, init.d0_left, init.masks, p);
                    raw = wta_baseline(ctx);
                }
                r.density = raw.density();
                r.disparity = p.fill ? post_fill(raw, scene.left, p).field : std::move(raw);
                break;
            }
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (double d : deltas) r.bmp.push_back(bmp(r.disparity, scene.gt, scene.occlusion, d));
        r.mse = mse(r.disparity, scene.gt, scene.occlusion);
        report.results.push_back(std::move(r));
    }
    return report;
}

}  // namespace rsfusion
