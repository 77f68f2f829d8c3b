#include "rsfusion/core.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace rsfusion {

void GrayImage::validate() const {
    for (float v : luma.data()) {
        if (!std::isfinite(v)) throw std::invalid_argument("image contains non-finite samples");
    }
    if (color) {
        if (color->size() != 3) throw std::invalid_argument("colour image must have three planes");
        for (const auto& plane : *color) {
            if (!plane.same_shape(luma)) throw std::invalid_argument("colour plane size differs from luminance");
        }
    }
}

void SparsePrior::validate(int width, int height, double d_min, double d_max) const {
    std::unordered_set<long long> seen;
    seen.reserve(entries.size());
    for (const auto& e : entries) {
        if (e.pos.x < 0 || e.pos.y < 0 || e.pos.x >= width || e.pos.y >= height) {
            throw std::invalid_argument("prior entry (" + std::to_string(e.pos.x) + "," + std::to_string(e.pos.y) +
                                        ") lies outside the image");
        }
        if (!std::isfinite(e.disparity) || e.disparity < d_min || e.disparity > d_max) {
            throw std::invalid_argument("prior disparity at (" + std::to_string(e.pos.x) + "," +
                                        std::to_string(e.pos.y) + ") outside the search range");
        }
        const long long key = static_cast<long long>(e.pos.y) * width + e.pos.x;
        if (!seen.insert(key).second) {
            throw std::invalid_argument("duplicate prior entry at (" + std::to_string(e.pos.x) + "," +
                                        std::to_string(e.pos.y) + ")");
        }
    }
}

std::size_t DisparityField::valid_count() const {
    return static_cast<std::size_t>(std::count_if(valid_.data().begin(), valid_.data().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

std::vector<double> window_vector(const Image<float>& img, Pixel center, int half) {
    const int side = 2 * half + 1;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(side) * side);
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) out.push_back(img.clamped(center.x + dx, center.y + dy));
    }
    const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(out.size());
    for (double& v : out) v -= mean;
    return out;
}

}  // namespace rsfusion
