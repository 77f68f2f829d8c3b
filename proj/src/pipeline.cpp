#include "rsfusion/pipeline.hpp"

#include <chrono>

namespace rsfusion {
namespace {

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink), start_(Clock::now()) {}
    void lap(const std::string& name) {
        const auto now = Clock::now();
        sink_[name] = std::chrono::duration<double>(now - start_).count();
        start_ = now;
    }

private:
    using Clock = std::chrono::steady_clock;
    std::map<std::string, double>& sink_;
    Clock::time_point start_;
};

}  // namespace

FuseOutput fuse(const GrayImage& left, const GrayImage& right, const SparsePrior& prior, const FusionParams& params,
                const FuseOptions& opts) {
    params.validate();
    left.validate();
    right.validate();
    if (left.width() != right.width() || left.height() != right.height()) {
        throw std::invalid_argument("left and right images differ in size");
    }
    prior.validate(left.width(), left.height(), params.d_min, params.d_max);
    if (opts.prior_right) opts.prior_right->validate(right.width(), right.height(), -params.d_max, -params.d_min);
    FuseOutput out;
    StageTimer timer(out.seconds);

    out.init = initial_maps(prior, opts.prior_right, left, right, params);
    timer.lap("initialization");

    const EnergyContext ctx =
        EnergyContext::create(left.luma, right.luma, out.init.d0_left, out.init.masks, params);
    out.entropy = ctx.entropy;
    timer.lap("context");

    out.growth = grow(out.init.refined_left, ctx, opts.grow);
    out.grown = out.growth.disparity;
    timer.lap("growing");

    if (params.fill) {
        PostFillResult filled = post_fill(out.grown, left, params);
        out.disparity = std::move(filled.field);
        out.filter_filled = filled.filter_filled;
        out.streak_filled = filled.streak_filled;
    } else {
        out.disparity = out.grown;
    }
    timer.lap("filling");
    return out;
}

}  // namespace rsfusion
