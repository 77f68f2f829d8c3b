#pragma once

// Subpixel correlation criteria of a correction t applied to the right window
// through a first-order Taylor expansion, u_R(x+d+t) ~ u_R(x+d) + t*du_R(x+d).
//
//   ECC (Pearson):   C(t) = uL.(uR + t duR) / (|uL| |uR + t duR|)
//   EMCC (Moravec):  C(t) = 2 (uL - t/2 duL).(uR + t/2 duR)
//                           / (|uL - t/2 duL|^2 + |uR + t/2 duR|^2)
//
// Both have closed-form maximisers. A degenerate (textureless) window is
// reported as std::nullopt rather than an exception since it is an expected
// outcome inside the matching loop.

#include <optional>
#include <span>
#include <vector>

#include "rsfusion/core.hpp"
#include "rsfusion/params.hpp"

namespace rsfusion {

inline constexpr double kDegeneracyFloor = 1e-8;

struct Interval {
    double lo = -0.99;
    double hi = 0.99;
};

inline constexpr Interval kSubpixelInterval{-0.99, 0.99};

struct TaylorPatchPair {
    std::vector<double> uL;
    std::vector<double> uR;
    std::vector<double> duL;
    std::vector<double> duR;

    std::size_t size() const { return uL.size(); }
};

/// Builds the pair for left pixel p and integer disparity d (right window centred at x+d).
/// Windows are zero-mean; differences are central differences along x on the image.
TaylorPatchPair make_patch_pair(const Image<float>& left, const Image<float>& right, Pixel p, int d, int half);

/// All inner products the two criteria need.
struct PairMoments {
    double LL = 0, RR = 0, LR = 0;
    double L_dR = 0, R_dR = 0, dR_dR = 0;
    double dL_R = 0, L_dL = 0, dL_dL = 0, dL_dR = 0;

    static PairMoments from(const TaylorPatchPair& pair);
};

struct RationalQuadratic {
    double a0 = 0, a1 = 0, a2 = 0;
    double b0 = 1, b1 = 0, b2 = 0;

    double numerator(double t) const { return a0 + t * (a1 + t * a2); }
    double denominator(double t) const { return b0 + t * (b1 + t * b2); }
    double operator()(double t) const { return numerator(t) / denominator(t); }

    /// Coefficients (c0, c1, c2) of the derivative numerator: f'(t) = C(t) / B(t)^2.
    std::array<double, 3> derivative_numerator() const {
        return {a1 * b0 - b1 * a0, 2.0 * (a2 * b0 - b2 * a0), a2 * b1 - b2 * a1};
    }
};

struct CorrelationMax {
    double t = 0.0;
    double value = 0.0;
};

std::optional<double> ecc(const PairMoments& m, double t);
std::optional<double> ecc(const TaylorPatchPair& pair, double t);
std::optional<CorrelationMax> ecc_maximize(const PairMoments& m, Interval iv = kSubpixelInterval);
std::optional<CorrelationMax> ecc_maximize(const TaylorPatchPair& pair, Interval iv = kSubpixelInterval);

std::optional<double> emcc(const PairMoments& m, double t);
std::optional<double> emcc(const TaylorPatchPair& pair, double t);
RationalQuadratic emcc_as_rational(const PairMoments& m);
RationalQuadratic emcc_as_rational(const TaylorPatchPair& pair);
std::optional<CorrelationMax> emcc_maximize(const PairMoments& m, Interval iv = kSubpixelInterval);
std::optional<CorrelationMax> emcc_maximize(const TaylorPatchPair& pair, Interval iv = kSubpixelInterval);

/// Global maximiser of A(t)/B(t) over [lo, hi]; B must not vanish there.
/// Exact ties resolve towards t = 0 when 0 lies inside the interval.
CorrelationMax maximize_rational_quadratic(const RationalQuadratic& f, Interval iv);

/// Criterion value at t = 0 (subpixel off) or at its maximiser.
std::optional<CorrelationMax> best_correlation(Criterion c, const PairMoments& m, bool subpixel,
                                               Interval iv = kSubpixelInterval);

/// Element-wise weighting of all four vectors; the zero-mean property is not re-imposed.
/// Throws std::invalid_argument on length mismatch.
TaylorPatchPair apply_weights(const TaylorPatchPair& pair, std::span<const double> w);

}  // namespace rsfusion
