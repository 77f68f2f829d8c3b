#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace rsfusion {

enum class Criterion { ECC, EMCC };

/// How the stereo and prior terms are mixed per pixel.
enum class FusionMode {
    Adaptive,    // entropy/occlusion driven weights
    Fixed,       // constant (fixed_eta_stereo, 1 - fixed_eta_stereo) everywhere
    StereoOnly,  // prior term switched off
};

struct FusionParams {
    int r = 1;
    double T = 0.5;
    double lambda = 0.01;
    double gamma_d = 5.0;
    double gamma_c = 10.0;
    double e_c = 0.2;
    int upsample_radius = 20;
    int window_half = 4;
    double entropy_subpixel_threshold = 0.4;
    int d_min = 0;
    int d_max = 64;
    Criterion criterion = Criterion::ECC;

    double cross_check_tol = 1.0;
    bool subpixel = true;
    bool aggregation = true;
    FusionMode fusion = FusionMode::Adaptive;
    double fixed_eta_stereo = 0.5;
    bool fill = true;

    int window_size() const { return 2 * window_half + 1; }
    int range_size() const { return d_max - d_min + 1; }

    /// Throws ConfigError naming the first violated field.
    void validate() const;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& msg)
        : std::runtime_error(msg), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Parses flat `key = value` text (one key per line, `#` starts a comment).
/// Unspecified keys keep their defaults.
FusionParams load_params(std::string_view config_text);
FusionParams load_params_file(const std::string& path);

/// Applies one key/value pair; shared by the config reader and CLI overrides.
void apply_param(FusionParams& p, std::string_view key, std::string_view value);

std::string to_string(Criterion c);
std::string to_string(FusionMode m);
nlohmann::json to_json(const FusionParams& p);

}  // namespace rsfusion
