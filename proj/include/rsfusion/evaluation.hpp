#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsfusion/core.hpp"
#include "rsfusion/params.hpp"

namespace rsfusion {

class NoValidPixels : public std::runtime_error {
public:
    NoValidPixels() : std::runtime_error("no non-occluded ground-truth pixels to evaluate") {}
};

/// Percentage of evaluated pixels with |D - G| > delta. Pixels that are occluded or
/// invalid in `gt` are skipped; invalid result pixels count as bad.
double bmp(const DisparityField& result, const DisparityField& gt, const Mask& occlusion, double delta);

/// Mean squared error over the same pixel set as bmp. Invalid result pixels are skipped;
/// throws NoValidPixels when nothing remains.
double mse(const DisparityField& result, const DisparityField& gt, const Mask& occlusion);

struct DegradeConfig {
    int factor = 10;
    double bias = 2.0;    // mean of the smooth additive bias field, pixels
    double sigma = 2.0;   // amplitude of the sinusoidal noise (peak-to-peak 2*sigma)
    double period = 50.0; // spatial wavelength of the noise, pixels

    void validate() const;
};

/// Samples gt on the grid {0, f, 2f, ...}^2 and perturbs it with the bias field
/// b(1 + 0.25 sin(2 pi x / W + a) sin(2 pi y / H + b)) plus the noise
/// sigma sin(2 pi x / P + px) sin(2 pi y / P + py); phases come from `seed`.
SparsePrior degrade(const DisparityField& gt, const DegradeConfig& cfg, std::uint64_t seed);

/// Smooth value noise: a hashed lattice with cell size `scale`, bicubically interpolated.
struct TextureSpec {
    double scale = 6.0;
    double contrast = 0.6;
    double mean = 0.5;
    int octaves = 2;
    std::uint64_t seed = 1;

    double sample(double u, double v) const;
};

/// Rectangle in left-image coordinates (may extend past the image) carrying a plane
/// d = a + bx * x + by * y and a texture painted in the same coordinates.
struct SceneLayer {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
    double a = 0.0, bx = 0.0, by = 0.0;
    TextureSpec texture;

    double disparity(double x, double y) const { return a + bx * x + by * y; }
    bool covers(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

struct SceneSpec {
    std::string name;
    int width = 320;
    int height = 240;
    int d_min = 0;
    int d_max = 32;
    std::vector<SceneLayer> layers;  // back to front
    double image_noise = 0.0;        // per-pixel Gaussian sigma in [0,1] intensity units
    std::uint64_t noise_seed = 1;
};

struct RenderedScene {
    SceneSpec spec;
    GrayImage left;
    GrayImage right;
    DisparityField gt;  // left-referenced
    Mask occlusion;     // left pixels not visible in the right view
};

/// Left pixel x shows the front-most layer covering it; right pixel x' shows the
/// front-most layer whose surface point x satisfies x + d(x) = x'. Throws
/// std::invalid_argument when a front layer lies behind a layer it covers.
RenderedScene render_scene(const SceneSpec& spec);

/// Built-in scenes: "single_plane" (fronto-parallel, d = 5.3) and "two_planes"
/// (low-texture slanted background with a fronto-parallel box in front).
SceneSpec builtin_scene(const std::string& name);
std::vector<std::string> builtin_scene_names();
SceneSpec single_plane_scene(double disparity = 5.3);
SceneSpec two_planes_scene();

enum class Method {
    FusedECC,
    FusedEMCC,
    WTA,            // per-pixel argmin of the full local energy
    WTAStereoOnly,  // prior term switched off
    UpsampleOnly,
    DataTermOnly,   // fixed eta, subpixel and aggregation on
    SimpleFusion,   // fixed eta, no subpixel, no aggregation
};

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct MethodResult {
    Method method = Method::FusedECC;
    std::vector<double> bmp;  // aligned with the report's deltas
    double mse = 0.0;
    double density = 0.0;     // fraction of valid pixels before filling
    double seconds = 0.0;
    DisparityField disparity;
};

struct ExperimentReport {
    std::string scene;
    std::vector<double> deltas;
    std::size_t prior_size = 0;
    std::uint64_t seed = 0;
    std::vector<MethodResult> results;

    const MethodResult& at(Method m) const;
    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// Copy of base with the fusion mode, criterion and subpixel/aggregation switches of method m.
FusionParams method_params(Method m, const FusionParams& base);

/// The parameters' fusion/criterion/subpixel fields are overridden per method.
/// Priors are clamped to the search range before use.
ExperimentReport run_experiment(const RenderedScene& scene, const DegradeConfig& degrade_cfg, std::uint64_t seed,
                                const FusionParams& params, const std::vector<Method>& methods,
                                const std::vector<double>& deltas = {0.5, 1.0, 2.0});

}  // namespace rsfusion
