#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rsfusion/core.hpp"
#include "rsfusion/params.hpp"

namespace rsfusion {

struct UpsampleConfig {
    int radius = 20;
    double gamma_c = 10.0;    // colour bandwidth, 8-bit intensity units
    double e_c = 0.2;         // minimum normalised support
    double gamma_s = 10.0;    // spatial Gaussian sigma, pixels

    static UpsampleConfig from(const FusionParams& p) {
        return {p.upsample_radius, p.gamma_c, p.e_c, p.upsample_radius / 2.0};
    }
    void validate() const;
};

struct RefineResult {
    SparsePrior kept;
    std::vector<Pixel> removed;
};

/// Local-consistency outlier filter: a seed is dropped when its distance to the
/// median of its neighbours (within twice the mean seed spacing) exceeds
/// max(2 px, 3 * MAD). Seeds with fewer than `min_neighbors` neighbours are kept.
RefineResult refine_sparse(const SparsePrior& prior, int width, int height, int min_neighbors = 4);

/// Joint spatial/colour weighted interpolation of scattered seeds.
class SeedFilter {
public:
    SeedFilter(const SparsePrior& seeds, const GrayImage& guide, const UpsampleConfig& cfg);

    /// Weight of a fully-supported pixel: one coincident seed of identical colour.
    static constexpr double kFullSupportWeight = 1.0;

    /// Weighted disparity at p, or nullopt when the support is below e_c * kFullSupportWeight.
    std::optional<double> evaluate(Pixel p) const;

private:
    struct Seed {
        int x, y;
        double d;
        std::array<float, 3> color;
    };
    std::array<float, 3> color_at(int x, int y) const;

    const GrayImage& guide_;
    UpsampleConfig cfg_;
    int cell_ = 1;
    int cols_ = 0, rows_ = 0;
    std::vector<std::vector<Seed>> buckets_;
    std::vector<double> spatial_;  // (2R+1)^2 table
};

DisparityField upsample(const SparsePrior& prior, const GrayImage& guide, const UpsampleConfig& cfg);

/// Left seed (x, y, d) becomes right seed (x + d, y, -d); collisions keep the larger |d|.
SparsePrior mirror_prior(const SparsePrior& left_prior, int width);

struct InitialMaps {
    DisparityField d0_left;
    DisparityField d0_right;
    OcclusionMasks masks;
    SparsePrior refined_left;
    std::vector<Pixel> removed;
};

/// D0 for both views plus Omega_SO (cross-check) and Omega_DO (gaps and refinement removals).
/// When `prior_right` is empty the right prior is mirrored from the refined left prior.
/// Throws EmptySeedSet when the left prior is empty.
InitialMaps initial_maps(const SparsePrior& prior_left, const std::optional<SparsePrior>& prior_right,
                         const GrayImage& left, const GrayImage& right, const FusionParams& params);

}  // namespace rsfusion
