#include "rsfusion/correlation.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace rsfusion {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Value of the replicated-border image's central x-difference.
double central_dx(const Image<float>& img, int x, int y) {
    if (x < 0 || x >= img.width()) return 0.0;
    return 0.5 * (static_cast<double>(img.clamped(x + 1, y)) - static_cast<double>(img.clamped(x - 1, y)));
}

// Minimum of q0 + q1 t + q2 t^2 over the interval.
double quadratic_min(double q0, double q1, double q2, Interval iv) {
    auto q = [&](double t) { return q0 + t * (q1 + t * q2); };
    double m = std::min(q(iv.lo), q(iv.hi));
    if (q2 > 0.0) {
        const double tv = -q1 / (2.0 * q2);
        if (tv > iv.lo && tv < iv.hi) m = std::min(m, q(tv));
    }
    return m;
}

bool inside(double t, Interval iv) { return t >= iv.lo && t <= iv.hi; }

template <typename F, std::size_t N>
CorrelationMax pick_best(const F& f, const std::array<double, N>& candidates, std::size_t count) {
    CorrelationMax best{candidates[0], f(candidates[0])};
    for (std::size_t i = 1; i < count; ++i) {
        const double v = f(candidates[i]);
        if (v > best.value) best = {candidates[i], v};
    }
    return best;
}

}  // namespace

TaylorPatchPair make_patch_pair(const Image<float>& left, const Image<float>& right, Pixel p, int d, int half) {
    TaylorPatchPair pair;
    pair.uL = window_vector(left, p, half);
    pair.uR = window_vector(right, {p.x + d, p.y}, half);
    const std::size_t n = pair.uL.size();
    pair.duL.reserve(n);
    pair.duR.reserve(n);
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            const int yl = std::clamp(p.y + dy, 0, left.height() - 1);
            pair.duL.push_back(central_dx(left, std::clamp(p.x + dx, -1, left.width()), yl));
            pair.duR.push_back(central_dx(right, std::clamp(p.x + d + dx, -1, right.width()), yl));
        }
    }
    // The shifted window is zero-meaned too, so its derivative is.
    for (auto* v : {&pair.duL, &pair.duR}) {
        double mean = 0.0;
        for (double x : *v) mean += x;
        mean /= static_cast<double>(v->size());
        for (double& x : *v) x -= mean;
    }
    return pair;
}

PairMoments PairMoments::from(const TaylorPatchPair& pair) {
    const std::size_t n = pair.uL.size();
    if (pair.uR.size() != n || pair.duL.size() != n || pair.duR.size() != n) {
        throw std::invalid_argument("patch pair vectors differ in length");
    }
    PairMoments m;
    m.LL = dot(pair.uL, pair.uL);
    m.RR = dot(pair.uR, pair.uR);
    m.LR = dot(pair.uL, pair.uR);
    m.L_dR = dot(pair.uL, pair.duR);
    m.R_dR = dot(pair.uR, pair.duR);
    m.dR_dR = dot(pair.duR, pair.duR);
    m.dL_R = dot(pair.duL, pair.uR);
    m.L_dL = dot(pair.uL, pair.duL);
    m.dL_dL = dot(pair.duL, pair.duL);
    m.dL_dR = dot(pair.duL, pair.duR);
    return m;
}

// ---------------------------------------------------------------- ECC

std::optional<double> ecc(const PairMoments& m, double t) {
    const double nl = std::sqrt(m.LL);
    const double nr = std::sqrt(std::max(0.0, m.RR + t * (2.0 * m.R_dR + t * m.dR_dR)));
    if (nl < kDegeneracyFloor || nr < kDegeneracyFloor) return std::nullopt;
    return (m.LR + t * m.L_dR) / (nl * nr);
}

std::optional<double> ecc(const TaylorPatchPair& pair, double t) { return ecc(PairMoments::from(pair), t); }

std::optional<CorrelationMax> ecc_maximize(const PairMoments& m, Interval iv) {
    const double nl = std::sqrt(m.LL);
    if (nl < kDegeneracyFloor) return std::nullopt;
    const double qmin = quadratic_min(m.RR, 2.0 * m.R_dR, m.dR_dR, iv);
    if (std::sqrt(std::max(0.0, qmin)) < kDegeneracyFloor) return std::nullopt;

    auto value = [&](double t) {
        return (m.LR + t * m.L_dR) / (nl * std::sqrt(m.RR + t * (2.0 * m.R_dR + t * m.dR_dR)));
    };

    // d/dt C ∝ n0 + n1 t; a maximum exists only when n1 < 0.
    const double a = m.LR, b = m.L_dR;
    const double n0 = b * m.RR - a * m.R_dR;
    const double n1 = b * m.R_dR - a * m.dR_dR;
    const double scale = std::abs(b * m.R_dR) + std::abs(a * m.dR_dR);

    std::array<double, 4> cand{};
    std::size_t count = 0;
    if (inside(0.0, iv)) cand[count++] = 0.0;
    if (scale > 0.0 && std::abs(n1) > kDegeneracyFloor * scale && n1 < 0.0) {
        const double ts = -n0 / n1;
        if (inside(ts, iv)) cand[count++] = ts;
    }
    cand[count++] = iv.lo;
    cand[count++] = iv.hi;
    return pick_best(value, cand, count);
}

std::optional<CorrelationMax> ecc_maximize(const TaylorPatchPair& pair, Interval iv) {
    return ecc_maximize(PairMoments::from(pair), iv);
}

// ---------------------------------------------------------------- EMCC

RationalQuadratic emcc_as_rational(const PairMoments& m) {
    RationalQuadratic f;
    f.a0 = 2.0 * m.LR;
    f.a1 = m.L_dR - m.dL_R;
    f.a2 = -0.5 * m.dL_dR;
    f.b0 = m.LL + m.RR;
    f.b1 = m.R_dR - m.L_dL;
    f.b2 = 0.25 * (m.dL_dL + m.dR_dR);
    return f;
}

RationalQuadratic emcc_as_rational(const TaylorPatchPair& pair) { return emcc_as_rational(PairMoments::from(pair)); }

std::optional<double> emcc(const PairMoments& m, double t) {
    const RationalQuadratic f = emcc_as_rational(m);
    const double den = f.denominator(t);
    if (den < kDegeneracyFloor) return std::nullopt;
    return f.numerator(t) / den;
}

std::optional<double> emcc(const TaylorPatchPair& pair, double t) {
    const std::size_t n = pair.size();
    if (pair.uR.size() != n || pair.duL.size() != n || pair.duR.size() != n) {
        throw std::invalid_argument("patch pair vectors differ in length");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double l = pair.uL[i] - 0.5 * t * pair.duL[i];
        const double r = pair.uR[i] + 0.5 * t * pair.duR[i];
        num += l * r;
        den += l * l + r * r;
    }
    if (den < kDegeneracyFloor) return std::nullopt;
    return 2.0 * num / den;
}

CorrelationMax maximize_rational_quadratic(const RationalQuadratic& f, Interval iv) {
    const auto [c0, c1, c2] = f.derivative_numerator();
    const double cscale = std::abs(c0) + std::abs(c1) + std::abs(c2);

    std::array<double, 5> cand{};
    std::size_t count = 0;
    if (inside(0.0, iv)) cand[count++] = 0.0;

    auto push_if_maximum = [&](double t) {
        // f'' at a root of C has the sign of C'(t) = 2 c2 t + c1.
        if (std::isfinite(t) && inside(t, iv) && 2.0 * c2 * t + c1 < 0.0) cand[count++] = t;
    };

    if (cscale > 0.0) {
        if (std::abs(c2) > 1e-14 * cscale) {
            const double disc = c1 * c1 - 4.0 * c0 * c2;
            if (disc > 0.0) {
                const double sq = std::sqrt(disc);
                const double q = -0.5 * (c1 + std::copysign(sq, c1));
                push_if_maximum(q / c2);
                if (q != 0.0) push_if_maximum(c0 / q);
            }
        } else if (std::abs(c1) > 1e-14 * cscale) {
            push_if_maximum(-c0 / c1);
        }
    }
    cand[count++] = iv.lo;
    cand[count++] = iv.hi;
    return pick_best(f, cand, count);
}

std::optional<CorrelationMax> emcc_maximize(const PairMoments& m, Interval iv) {
    const RationalQuadratic f = emcc_as_rational(m);
    if (quadratic_min(f.b0, f.b1, f.b2, iv) < kDegeneracyFloor) return std::nullopt;
    return maximize_rational_quadratic(f, iv);
}

std::optional<CorrelationMax> emcc_maximize(const TaylorPatchPair& pair, Interval iv) {
    return emcc_maximize(PairMoments::from(pair), iv);
}

std::optional<CorrelationMax> best_correlation(Criterion c, const PairMoments& m, bool subpixel, Interval iv) {
    if (subpixel) return c == Criterion::ECC ? ecc_maximize(m, iv) : emcc_maximize(m, iv);
    const std::optional<double> v = c == Criterion::ECC ? ecc(m, 0.0) : emcc(m, 0.0);
    if (!v) return std::nullopt;
    return CorrelationMax{0.0, *v};
}

TaylorPatchPair apply_weights(const TaylorPatchPair& pair, std::span<const double> w) {
    const std::size_t n = pair.size();
    if (w.size() != n || pair.uR.size() != n || pair.duL.size() != n || pair.duR.size() != n) {
        throw std::invalid_argument("weight vector length does not match the window");
    }
    TaylorPatchPair out = pair;
    for (std::size_t i = 0; i < n; ++i) {
        out.uL[i] *= w[i];
        out.uR[i] *= w[i];
        out.duL[i] *= w[i];
        out.duR[i] *= w[i];
    }
    return out;
}

}  // namespace rsfusion
