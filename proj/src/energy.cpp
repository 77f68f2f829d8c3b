#include "rsfusion/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rsfusion/parallel.hpp"

namespace rsfusion {
namespace {

Image<double> x_differences(const Image<float>& img) {
    Image<double> out(img.width(), img.height(), 0.0);
    parallel_rows(img.height(), [&](int y) {
        for (int x = 0; x < img.width(); ++x) {
            out(x, y) = 0.5 * (static_cast<double>(img.clamped(x + 1, y)) - static_cast<double>(img.clamped(x - 1, y)));
        }
    });
    return out;
}

}  // namespace

EnergyContext EnergyContext::create(const Image<float>& left, const Image<float>& right, DisparityField d0,
                                    OcclusionMasks masks, const FusionParams& params) {
    params.validate();
    const int w = left.width(), h = left.height();
    if (!right.same_shape(left) || d0.width() != w || d0.height() != h || !masks.stereo_occ.same_shape(w, h) ||
        !masks.depth_occ.same_shape(w, h)) {
        throw std::invalid_argument("energy context inputs differ in size");
    }
    EnergyContext ctx;
    ctx.left = left;
    ctx.right = right;
    ctx.left_dx = x_differences(left);
    ctx.right_dx = x_differences(right);
    ctx.d0 = std::move(d0);
    ctx.masks = std::move(masks);
    ctx.entropy = entropy_field(left, params.window_half);
    ctx.params = params;
    return ctx;
}

std::vector<double> aggregation_weights(const DisparityField& d0, Pixel p, int half, double gamma_d) {
    const int side = 2 * half + 1;
    std::vector<double> w(static_cast<std::size_t>(side) * side, 1.0);
    if (!d0.valid(p.x, p.y)) return w;
    const double dp = d0.value(p.x, p.y);
    std::size_t k = 0;
    for (int dy = -half; dy <= half; ++dy) {
        const int y = std::clamp(p.y + dy, 0, d0.height() - 1);
        for (int dx = -half; dx <= half; ++dx, ++k) {
            const int x = std::clamp(p.x + dx, 0, d0.width() - 1);
            if (d0.valid(x, y)) w[k] = consistency_kernel(dp - d0.value(x, y), gamma_d);
        }
    }
    return w;
}

double regularizer(double d, double d0_p, double lambda) { return lambda * std::abs(d - d0_p); }

Image<float> entropy_field(const Image<float>& img, int half) {
    const int w = img.width(), h = img.height();
    Image<float> out(w, h, 0.0f);
    if (w == 0 || h == 0) return out;

    Image<std::uint8_t> bins(w, h);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const int b = static_cast<int>(std::floor(static_cast<double>(img[i]) * kEntropyBins));
        bins[i] = static_cast<std::uint8_t>(std::clamp(b, 0, kEntropyBins - 1));
    }
    const int side = 2 * half + 1;
    const int n = side * side;
    // term[c] = (c/n) log(n/c) / log(bins)
    std::vector<double> term(static_cast<std::size_t>(n) + 1, 0.0);
    const double norm = std::log(static_cast<double>(kEntropyBins));
    for (int c = 1; c <= n; ++c) {
        term[static_cast<std::size_t>(c)] =
            (static_cast<double>(c) / n) * std::log(static_cast<double>(n) / c) / norm;
    }

    parallel_rows(h, [&](int y) {
        std::array<int, kEntropyBins> hist{};
        auto column = [&](int x, int delta) {
            const int cx = std::clamp(x, 0, w - 1);
            for (int dy = -half; dy <= half; ++dy) hist[bins(cx, std::clamp(y + dy, 0, h - 1))] += delta;
        };
        for (int dx = -half; dx <= half; ++dx) column(dx, +1);
        for (int x = 0; x < w; ++x) {
            if (x > 0) {
                column(x - half - 1, -1);
                column(x + half, +1);
            }
            double e = 0.0;
            for (int c : hist) e += term[static_cast<std::size_t>(c)];
            out(x, y) = static_cast<float>(std::clamp(e, 0.0, 1.0));
        }
    });
    return out;
}

Mask stereo_occlusion_mask(const DisparityField& lr, const DisparityField& rl, double tol) {
    if (lr.width() != rl.width() || lr.height() != rl.height()) {
        throw std::invalid_argument("cross-check maps differ in size");
    }
    Mask out(lr.width(), lr.height(), 0);
    for (int y = 0; y < lr.height(); ++y) {
        for (int x = 0; x < lr.width(); ++x) {
            if (!lr.valid(x, y)) continue;
            const double d = lr.value(x, y);
            const int xr = static_cast<int>(std::lround(x + d));
            if (xr < 0 || xr >= rl.width() || !rl.valid(xr, y)) {
                out(x, y) = 1;
                continue;
            }
            if (std::abs(d + rl.value(xr, y)) > tol) out(x, y) = 1;
        }
    }
    return out;
}

EtaPair eta(const EnergyContext& ctx, Pixel p) {
    const bool d0_ok = ctx.d0.valid(p.x, p.y);
    switch (ctx.params.fusion) {
        case FusionMode::StereoOnly:
            return {1.0, 0.0, EtaCase::Mixed};
        case FusionMode::Fixed:
            if (!d0_ok) return {1.0, 0.0, EtaCase::DepthOccluded};
            return {ctx.params.fixed_eta_stereo, 1.0 - ctx.params.fixed_eta_stereo, EtaCase::Mixed};
        case FusionMode::Adaptive:
            break;
    }
    const bool so = ctx.masks.stereo_occ(p.x, p.y) != 0;
    const bool dO = ctx.masks.depth_occ(p.x, p.y) != 0 || !d0_ok;
    if (so && dO) {
        const double inf = std::numeric_limits<double>::infinity();
        return {inf, inf, EtaCase::Infeasible};
    }
    if (so) return {0.0, 1.0, EtaCase::StereoOccluded};
    if (dO) return {1.0, 0.0, EtaCase::DepthOccluded};
    const double e = ctx.entropy(p.x, p.y);
    return {e, 1.0 - e, EtaCase::Mixed};
}

PixelEvaluator::PixelEvaluator(const EnergyContext& ctx) : ctx_(ctx) {
    side_ = ctx.params.window_size();
    const auto n = static_cast<std::size_t>(side_) * side_;
    w_.assign(n, 1.0);
    uL_.assign(n, 0.0);
    duL_.assign(n, 0.0);
    r_.assign(n, 0.0);
    dr_.assign(n, 0.0);
}

void PixelEvaluator::set_pixel(Pixel p) {
    p_ = p;
    eta_ = rsfusion::eta(ctx_, p);
    const FusionParams& prm = ctx_.params;
    const int half = prm.window_half;
    subpixel_here_ = prm.subpixel && ctx_.entropy(p.x, p.y) >= prm.entropy_subpixel_threshold;

    if (prm.aggregation) {
        w_ = aggregation_weights(ctx_.d0, p, half, prm.gamma_d);
    } else {
        std::fill(w_.begin(), w_.end(), 1.0);
    }

    const int w = ctx_.width(), h = ctx_.height();
    double sum = 0.0, dsum = 0.0;
    std::size_t k = 0;
    for (int dy = -half; dy <= half; ++dy) {
        const int y = std::clamp(p.y + dy, 0, h - 1);
        for (int dx = -half; dx <= half; ++dx, ++k) {
            const int x = p.x + dx;
            const int cx = std::clamp(x, 0, w - 1);
            uL_[k] = ctx_.left(cx, y);
            duL_[k] = (x == cx) ? ctx_.left_dx(cx, y) : 0.0;
            sum += uL_[k];
            dsum += duL_[k];
        }
    }
    const double n = static_cast<double>(uL_.size());
    const double mean = sum / n, dmean = dsum / n;
    LL_ = L_dL_ = dL_dL_ = 0.0;
    for (std::size_t i = 0; i < uL_.size(); ++i) {
        uL_[i] = w_[i] * (uL_[i] - mean);
        duL_[i] = w_[i] * (duL_[i] - dmean);
        LL_ += uL_[i] * uL_[i];
        L_dL_ += uL_[i] * duL_[i];
        dL_dL_ += duL_[i] * duL_[i];
    }
}

DataTerm PixelEvaluator::data_term(int d, bool allow_subpixel) const {
    const int half = ctx_.params.window_half;
    const int w = ctx_.width(), h = ctx_.height();
    double sum = 0.0, dsum = 0.0;
    std::size_t k = 0;
    for (int dy = -half; dy <= half; ++dy) {
        const int y = std::clamp(p_.y + dy, 0, h - 1);
        for (int dx = -half; dx <= half; ++dx, ++k) {
            const int x = p_.x + d + dx;
            const int cx = std::clamp(x, 0, w - 1);
            r_[k] = ctx_.right(cx, y);
            dr_[k] = (x == cx) ? ctx_.right_dx(cx, y) : 0.0;
            sum += r_[k];
            dsum += dr_[k];
        }
    }
    const double n = static_cast<double>(r_.size());
    const double mean = sum / n, dmean = dsum / n;
    PairMoments m;
    m.LL = LL_;
    m.L_dL = L_dL_;
    m.dL_dL = dL_dL_;
    for (std::size_t i = 0; i < r_.size(); ++i) {
        const double r = w_[i] * (r_[i] - mean);
        const double dr = w_[i] * (dr_[i] - dmean);
        m.RR += r * r;
        m.LR += uL_[i] * r;
        m.L_dR += uL_[i] * dr;
        m.R_dR += r * dr;
        m.dR_dR += dr * dr;
        m.dL_R += duL_[i] * r;
        m.dL_dR += duL_[i] * dr;
    }
    const auto best = best_correlation(ctx_.params.criterion, m, subpixel_here_ && allow_subpixel);
    if (!best) return {2.0, 0.0, true};
    return {std::clamp(1.0 - best->value, 0.0, 2.0), best->t, false};
}

LocalEnergy PixelEvaluator::energy(int d, bool allow_subpixel) const {
    if (eta_.infeasible()) throw InfeasiblePixel("local energy requested on a stereo- and depth-occluded pixel");
    LocalEnergy out;
    if (eta_.stereo > 0.0) {
        const DataTerm dt = data_term(d, allow_subpixel);
        out.energy += eta_.stereo * dt.energy;
        out.t = dt.t;
    }
    if (eta_.prior > 0.0) {
        out.energy += eta_.prior * regularizer(d, ctx_.d0.value(p_.x, p_.y), ctx_.params.lambda);
    }
    return out;
}

DataTerm data_term(const EnergyContext& ctx, Pixel p, int d) {
    PixelEvaluator ev(ctx);
    ev.set_pixel(p);
    return ev.data_term(d);
}

LocalEnergy local_energy(const EnergyContext& ctx, Pixel p, int d) {
    PixelEvaluator ev(ctx);
    ev.set_pixel(p);
    return ev.energy(d);
}

}  // namespace rsfusion
