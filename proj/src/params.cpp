#include "rsfusion/params.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace rsfusion {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

int parse_int(std::string_view key, std::string_view v) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size()) {
        throw ConfigError(std::string(key), std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
    }
    return out;
}

double parse_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    try {
        std::size_t used = 0;
        const double out = std::stod(s, &used);
        if (used == s.size()) return out;
    } catch (const std::exception&) {
    }
    if (lower(s) == "inf") return std::numeric_limits<double>::infinity();
    throw ConfigError(std::string(key), std::string(key) + ": expected a number, got '" + s + "'");
}

bool parse_bool(std::string_view key, std::string_view v) {
    const std::string s = lower(v);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ConfigError(std::string(key), std::string(key) + ": expected a boolean, got '" + std::string(v) + "'");
}

}  // namespace

void FusionParams::validate() const {
    if (r < 1) throw ConfigError("r", "r must be ≥1");
    if (!(T > 0)) throw ConfigError("T", "T must be > 0");
    if (!(lambda >= 0)) throw ConfigError("lambda", "lambda must be ≥0");
    if (!(gamma_d > 0)) throw ConfigError("gamma_d", "gamma_d must be > 0");
    if (!(gamma_c > 0)) throw ConfigError("gamma_c", "gamma_c must be > 0");
    if (!(e_c >= 0 && e_c <= 1)) throw ConfigError("e_c", "e_c must lie in [0,1]");
    if (upsample_radius < 1) throw ConfigError("upsample_radius", "upsample_radius must be ≥1");
    if (window_half < 1) throw ConfigError("window", "window must be at least 3x3");
    if (!(entropy_subpixel_threshold >= 0 && entropy_subpixel_threshold <= 1)) {
        throw ConfigError("entropy_threshold", "entropy_threshold must lie in [0,1]");
    }
    if (d_min >= d_max) throw ConfigError("range", "d_min must be < d_max");
    if (!(cross_check_tol >= 0)) throw ConfigError("cross_check_tol", "cross_check_tol must be ≥0");
    if (!(fixed_eta_stereo >= 0 && fixed_eta_stereo <= 1)) {
        throw ConfigError("fixed_eta", "fixed_eta must lie in [0,1]");
    }
}

void apply_param(FusionParams& p, std::string_view raw_key, std::string_view raw_value) {
    const std::string key = lower(trim(raw_key));
    const std::string_view v = trim(raw_value);
    if (key == "r") {
        p.r = parse_int(key, v);
    } else if (key == "t") {
        p.T = parse_double(key, v);
    } else if (key == "lambda") {
        p.lambda = parse_double(key, v);
    } else if (key == "gamma_d") {
        p.gamma_d = parse_double(key, v);
    } else if (key == "gamma_c") {
        p.gamma_c = parse_double(key, v);
    } else if (key == "e_c") {
        p.e_c = parse_double(key, v);
    } else if (key == "upsample_radius") {
        p.upsample_radius = parse_int(key, v);
    } else if (key == "window") {
        const int side = parse_int(key, v);
        if (side < 3 || side % 2 == 0) throw ConfigError("window", "window must be an odd size ≥3");
        p.window_half = side / 2;
    } else if (key == "window_half") {
        p.window_half = parse_int(key, v);
    } else if (key == "entropy_threshold" || key == "entropy_subpixel_threshold") {
        p.entropy_subpixel_threshold = parse_double(key, v);
    } else if (key == "d_min") {
        p.d_min = parse_int(key, v);
    } else if (key == "d_max") {
        p.d_max = parse_int(key, v);
    } else if (key == "range") {
        const auto colon = v.find(':');
        if (colon == std::string_view::npos) throw ConfigError("range", "range must be dmin:dmax");
        p.d_min = parse_int("range", trim(v.substr(0, colon)));
        p.d_max = parse_int("range", trim(v.substr(colon + 1)));
    } else if (key == "criterion") {
        const std::string c = lower(v);
        if (c == "ecc") {
            p.criterion = Criterion::ECC;
        } else if (c == "emcc") {
            p.criterion = Criterion::EMCC;
        } else {
            throw ConfigError("criterion", "criterion must be ecc or emcc");
        }
    } else if (key == "cross_check_tol") {
        p.cross_check_tol = parse_double(key, v);
    } else if (key == "subpixel") {
        p.subpixel = parse_bool(key, v);
    } else if (key == "aggregation") {
        p.aggregation = parse_bool(key, v);
    } else if (key == "fusion") {
        const std::string m = lower(v);
        if (m == "adaptive") {
            p.fusion = FusionMode::Adaptive;
        } else if (m == "fixed") {
            p.fusion = FusionMode::Fixed;
        } else if (m == "stereo_only") {
            p.fusion = FusionMode::StereoOnly;
        } else {
            throw ConfigError("fusion", "fusion must be adaptive, fixed or stereo_only");
        }
    } else if (key == "fixed_eta") {
        p.fixed_eta_stereo = parse_double(key, v);
    } else if (key == "fill") {
        p.fill = parse_bool(key, v);
    } else {
        throw ConfigError(key, "unknown configuration key '" + key + "'");
    }
}

FusionParams load_params(std::string_view text) {
    FusionParams p;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", "line " + std::to_string(lineno) + ": expected key=value");
        }
        apply_param(p, view.substr(0, eq), view.substr(eq + 1));
    }
    p.validate();
    return p;
}

FusionParams load_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_params(ss.str());
}

std::string to_string(Criterion c) { return c == Criterion::ECC ? "ecc" : "emcc"; }

std::string to_string(FusionMode m) {
    switch (m) {
        case FusionMode::Adaptive: return "adaptive";
        case FusionMode::Fixed: return "fixed";
        case FusionMode::StereoOnly: return "stereo_only";
    }
    return "adaptive";
}

nlohmann::json to_json(const FusionParams& p) {
    nlohmann::json j;
    j["r"] = p.r;
    j["T"] = std::isfinite(p.T) ? nlohmann::json(p.T) : nlohmann::json("inf");
    j["lambda"] = p.lambda;
    j["gamma_d"] = p.gamma_d;
    j["gamma_c"] = p.gamma_c;
    j["e_c"] = p.e_c;
    j["upsample_radius"] = p.upsample_radius;
    j["window"] = p.window_size();
    j["entropy_threshold"] = p.entropy_subpixel_threshold;
    j["d_min"] = p.d_min;
    j["d_max"] = p.d_max;
    j["criterion"] = to_string(p.criterion);
    j["cross_check_tol"] = p.cross_check_tol;
    j["subpixel"] = p.subpixel;
    j["aggregation"] = p.aggregation;
    j["fusion"] = to_string(p.fusion);
    j["fixed_eta"] = p.fixed_eta_stereo;
    j["fill"] = p.fill;
    return j;
}

}  // namespace rsfusion
