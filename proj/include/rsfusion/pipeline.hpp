#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsfusion/core.hpp"
#include "rsfusion/energy.hpp"
#include "rsfusion/growing.hpp"
#include "rsfusion/initialization.hpp"
#include "rsfusion/params.hpp"

namespace rsfusion {

struct FuseOptions {
    GrowOptions grow;
    std::optional<SparsePrior> prior_right;
};

struct FuseOutput {
    DisparityField disparity;  // final map (post-filled unless params.fill is false)
    DisparityField grown;      // region-growing output before filling
    GrowResult growth;
    InitialMaps init;
    Image<float> entropy;
    std::size_t filter_filled = 0;
    std::size_t streak_filled = 0;
    std::map<std::string, double> seconds;
};

/// Initial maps, region growing and post-filling. Throws EmptySeedSet when no seed is usable.
FuseOutput fuse(const GrayImage& left, const GrayImage& right, const SparsePrior& prior, const FusionParams& params,
                const FuseOptions& opts = {});

}  // namespace rsfusion
