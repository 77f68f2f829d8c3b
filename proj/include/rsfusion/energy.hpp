#pragma once

#include <limits>
#include <vector>

#include "rsfusion/core.hpp"
#include "rsfusion/correlation.hpp"
#include "rsfusion/params.hpp"

namespace rsfusion {

/// Read-only inputs of the local energy. Built once per fusion run.
struct EnergyContext {
    Image<float> left;
    Image<float> right;
    Image<double> left_dx;   // central x-differences, zero outside the image
    Image<double> right_dx;
    DisparityField d0;
    OcclusionMasks masks;
    Image<float> entropy;    // normalised window entropy of the left image
    FusionParams params;

    static EnergyContext create(const Image<float>& left, const Image<float>& right, DisparityField d0,
                                OcclusionMasks masks, const FusionParams& params);

    int width() const { return left.width(); }
    int height() const { return left.height(); }
};

enum class EtaCase { StereoOccluded, DepthOccluded, Mixed, Infeasible };

struct EtaPair {
    double stereo = 0.0;
    double prior = 0.0;
    EtaCase kind = EtaCase::Mixed;

    bool infeasible() const { return kind == EtaCase::Infeasible; }
};

struct DataTerm {
    double energy = 2.0;  // E_S = 1 - C(t*), 2 when the window is degenerate
    double t = 0.0;
    bool degenerate = false;
};

struct LocalEnergy {
    double energy = 0.0;
    double t = 0.0;
};

/// g(x; gamma) = exp(-|x| / gamma).
inline double consistency_kernel(double x, double gamma) { return std::exp(-std::abs(x) / gamma); }

std::vector<double> aggregation_weights(const DisparityField& d0, Pixel p, int half, double gamma_d);
double regularizer(double d, double d0_p, double lambda);

inline constexpr int kEntropyBins = 32;
Image<float> entropy_field(const Image<float>& img, int half);

/// Cross-check of a left-referenced map against a right-referenced one.
/// Left pixel x corresponds to right pixel x + d_LR, where a consistent map holds d_RL = -d_LR.
Mask stereo_occlusion_mask(const DisparityField& left_to_right, const DisparityField& right_to_left, double tol);

EtaPair eta(const EnergyContext& ctx, Pixel p);
DataTerm data_term(const EnergyContext& ctx, Pixel p, int d);
/// Throws InfeasiblePixel on stereo- and depth-occluded pixels.
LocalEnergy local_energy(const EnergyContext& ctx, Pixel p, int d);

/// Evaluates the data term / local energy of one pixel for many candidate disparities,
/// reusing the left-window quantities. Not thread-safe; use one per worker.
class PixelEvaluator {
public:
    explicit PixelEvaluator(const EnergyContext& ctx);

    void set_pixel(Pixel p);
    Pixel pixel() const { return p_; }
    const EtaPair& eta() const { return eta_; }

    DataTerm data_term(int d, bool allow_subpixel = true) const;
    /// Requires a feasible pixel.
    LocalEnergy energy(int d, bool allow_subpixel = true) const;

private:
    const EnergyContext& ctx_;
    Pixel p_{};
    EtaPair eta_{};
    bool subpixel_here_ = false;
    int side_ = 0;
    std::vector<double> w_;
    std::vector<double> uL_;   // weighted
    std::vector<double> duL_;  // weighted
    double LL_ = 0, L_dL_ = 0, dL_dL_ = 0;
    mutable std::vector<double> r_;
    mutable std::vector<double> dr_;
};

}  // namespace rsfusion
