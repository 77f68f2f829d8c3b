#include "rsfusion/initialization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "rsfusion/energy.hpp"
#include "rsfusion/parallel.hpp"

namespace rsfusion {
namespace {

double mean_spacing(std::size_t n, int width, int height) {
    if (n == 0) return 0.0;
    return std::sqrt(static_cast<double>(width) * height / static_cast<double>(n));
}

double median_of(std::vector<double>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

}  // namespace

void UpsampleConfig::validate() const {
    if (radius < 1) throw std::invalid_argument("upsampling radius must be ≥1");
    if (!(gamma_c > 0) || !(gamma_s > 0)) throw std::invalid_argument("upsampling bandwidths must be > 0");
    if (!(e_c >= 0 && e_c <= 1)) throw std::invalid_argument("e_c must lie in [0,1]");
}

RefineResult refine_sparse(const SparsePrior& prior, int width, int height, int min_neighbors) {
    RefineResult out;
    const std::size_t n = prior.size();
    if (n == 0) return out;
    const double radius = 2.0 * mean_spacing(n, width, height);
    const double r2 = radius * radius;
    const int cell = std::max(1, static_cast<int>(std::ceil(radius)));
    const int cols = (width + cell - 1) / cell, rows = (height + cell - 1) / cell;
    std::vector<std::vector<std::size_t>> buckets(static_cast<std::size_t>(cols) * rows);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = prior.entries[i];
        buckets[static_cast<std::size_t>(e.pos.y / cell) * cols + e.pos.x / cell].push_back(i);
    }

    std::vector<double> neigh, dev;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& e = prior.entries[i];
        neigh.clear();
        const int cx = e.pos.x / cell, cy = e.pos.y / cell;
        for (int by = std::max(0, cy - 1); by <= std::min(rows - 1, cy + 1); ++by) {
            for (int bx = std::max(0, cx - 1); bx <= std::min(cols - 1, cx + 1); ++bx) {
                for (std::size_t j : buckets[static_cast<std::size_t>(by) * cols + bx]) {
                    if (j == i) continue;
                    const auto& q = prior.entries[j];
                    const double dx = q.pos.x - e.pos.x, dy = q.pos.y - e.pos.y;
                    if (dx * dx + dy * dy <= r2) neigh.push_back(q.disparity);
                }
            }
        }
        bool keep = true;
        if (static_cast<int>(neigh.size()) >= min_neighbors) {
            const double med = median_of(neigh);
            dev.clear();
            for (double d : neigh) dev.push_back(std::abs(d - med));
            const double mad = median_of(dev);
            keep = std::abs(e.disparity - med) <= std::max(2.0, 3.0 * mad);
        }
        if (keep) {
            out.kept.entries.push_back(e);
        } else {
            out.removed.push_back(e.pos);
        }
    }
    return out;
}

SeedFilter::SeedFilter(const SparsePrior& seeds, const GrayImage& guide, const UpsampleConfig& cfg)
    : guide_(guide), cfg_(cfg) {
    cfg_.validate();
    const int w = guide.width(), h = guide.height();
    const int R = cfg_.radius;
    cell_ = R;
    cols_ = (w + cell_ - 1) / cell_;
    rows_ = (h + cell_ - 1) / cell_;
    buckets_.assign(static_cast<std::size_t>(cols_) * rows_, {});
    for (const auto& e : seeds.entries) {
        if (!guide.luma.contains(e.pos.x, e.pos.y)) continue;
        buckets_[static_cast<std::size_t>(e.pos.y / cell_) * cols_ + e.pos.x / cell_].push_back(
            {e.pos.x, e.pos.y, e.disparity, color_at(e.pos.x, e.pos.y)});
    }

    const int side = 2 * R + 1;
    spatial_.assign(static_cast<std::size_t>(side) * side, 0.0);
    const double s2 = 2.0 * cfg_.gamma_s * cfg_.gamma_s;
    for (int dy = -R; dy <= R; ++dy) {
        for (int dx = -R; dx <= R; ++dx) {
            const double r2 = static_cast<double>(dx) * dx + static_cast<double>(dy) * dy;
            if (r2 <= static_cast<double>(R) * R) {
                spatial_[static_cast<std::size_t>(dy + R) * side + (dx + R)] = std::exp(-r2 / s2);
            }
        }
    }
}

std::array<float, 3> SeedFilter::color_at(int x, int y) const {
    if (guide_.color) {
        const auto& c = *guide_.color;
        return {255.0f * c[0](x, y), 255.0f * c[1](x, y), 255.0f * c[2](x, y)};
    }
    return {255.0f * guide_.luma(x, y), 0.0f, 0.0f};
}

std::optional<double> SeedFilter::evaluate(Pixel p) const {
    const int R = cfg_.radius;
    const int side = 2 * R + 1;
    const auto c = color_at(p.x, p.y);
    double sw = 0.0, swd = 0.0;
    const int bx0 = std::max(0, (p.x - R) / cell_), bx1 = std::min(cols_ - 1, (p.x + R) / cell_);
    const int by0 = std::max(0, (p.y - R) / cell_), by1 = std::min(rows_ - 1, (p.y + R) / cell_);
    for (int by = by0; by <= by1; ++by) {
        for (int bx = bx0; bx <= bx1; ++bx) {
            for (const Seed& s : buckets_[static_cast<std::size_t>(by) * cols_ + bx]) {
                const int dx = s.x - p.x, dy = s.y - p.y;
                if (dx < -R || dx > R || dy < -R || dy > R) continue;
                const double ws = spatial_[static_cast<std::size_t>(dy + R) * side + (dx + R)];
                if (ws == 0.0) continue;
                const double l1 = std::abs(c[0] - s.color[0]) + std::abs(c[1] - s.color[1]) +
                                  std::abs(c[2] - s.color[2]);
                const double wgt = ws * std::exp(-l1 / cfg_.gamma_c);
                sw += wgt;
                swd += wgt * s.d;
            }
        }
    }
    if (sw <= 0.0 || sw < cfg_.e_c * kFullSupportWeight) return std::nullopt;
    return swd / sw;
}

DisparityField upsample(const SparsePrior& prior, const GrayImage& guide, const UpsampleConfig& cfg) {
    DisparityField out(guide.width(), guide.height());
    if (prior.empty()) return out;
    const SeedFilter filter(prior, guide, cfg);
    parallel_rows(guide.height(), [&](int y) {
        for (int x = 0; x < guide.width(); ++x) {
            if (const auto v = filter.evaluate({x, y})) out.set(x, y, *v);
        }
    });
    return out;
}

SparsePrior mirror_prior(const SparsePrior& left_prior, int width) {
    std::map<std::pair<int, int>, double> slots;  // (y, x) -> d
    for (const auto& e : left_prior.entries) {
        const long xr = std::lround(e.pos.x + e.disparity);
        if (xr < 0 || xr >= width) continue;
        const auto key = std::make_pair(e.pos.y, static_cast<int>(xr));
        const double d = -e.disparity;
        auto [it, inserted] = slots.emplace(key, d);
        if (!inserted && std::abs(d) > std::abs(it->second)) it->second = d;
    }
    SparsePrior out;
    out.entries.reserve(slots.size());
    for (const auto& [key, d] : slots) out.entries.push_back({{key.second, key.first}, d});
    return out;
}

InitialMaps initial_maps(const SparsePrior& prior_left, const std::optional<SparsePrior>& prior_right,
                         const GrayImage& left, const GrayImage& right, const FusionParams& params) {
    if (prior_left.empty()) throw EmptySeedSet();
    const int w = left.width(), h = left.height();
    if (right.width() != w || right.height() != h) throw std::invalid_argument("stereo images differ in size");

    InitialMaps out;
    RefineResult refined = refine_sparse(prior_left, w, h);
    if (refined.kept.empty()) throw EmptySeedSet();
    out.refined_left = std::move(refined.kept);
    out.removed = std::move(refined.removed);

    const SparsePrior right_seeds =
        prior_right ? refine_sparse(*prior_right, w, h).kept : mirror_prior(out.refined_left, w);

    const UpsampleConfig cfg = UpsampleConfig::from(params);
    out.d0_left = upsample(out.refined_left, left, cfg);
    out.d0_right = upsample(right_seeds, right, cfg);

    out.masks = OcclusionMasks(w, h);
    for (std::size_t i = 0; i < out.d0_left.size(); ++i) {
        if (!out.d0_left.valid(i)) out.masks.depth_occ[i] = 1;
    }
    for (const Pixel& p : out.removed) out.masks.depth_occ(p.x, p.y) = 1;
    out.masks.stereo_occ = stereo_occlusion_mask(out.d0_left, out.d0_right, params.cross_check_tol);
    return out;
}

}  // namespace rsfusion
