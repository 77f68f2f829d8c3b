#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rsfusion {

struct Pixel {
    int x = 0;
    int y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Row-major dense 2-D buffer.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked_area(width, height)), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& operator()(int x, int y) { return data_[index(x, y)]; }
    const T& operator()(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    // Replicated border.
    const T& clamped(int x, int y) const {
        x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
        y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
        return data_[index(x, y)];
    }

    std::span<T> row(int y) { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }
    std::span<const T> row(int y) const { return {data_.data() + index(0, y), static_cast<std::size_t>(width_)}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(int w, int h) const { return width_ == w && height_ == h; }
    template <typename U>
    bool same_shape(const Image<U>& o) const { return width_ == o.width() && height_ == o.height(); }

private:
    static long long checked_area(int w, int h) {
        if (w < 0 || h < 0) throw std::invalid_argument("image dimensions must be non-negative");
        return static_cast<long long>(w) * h;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using Mask = Image<std::uint8_t>;

/// Luminance image with samples in [0,1]; colour planes (R,G,B in [0,1]) are kept when the source had them.
struct GrayImage {
    Image<float> luma;
    std::optional<std::vector<Image<float>>> color;

    GrayImage() = default;
    explicit GrayImage(Image<float> l) : luma(std::move(l)) {}

    int width() const { return luma.width(); }
    int height() const { return luma.height(); }
    float operator()(int x, int y) const { return luma(x, y); }

    /// Throws std::invalid_argument when a sample is non-finite or colour planes mismatch.
    void validate() const;
};

struct SparseEntry {
    Pixel pos;
    double disparity = 0.0;
};

struct SparsePrior {
    std::vector<SparseEntry> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }

    /// Checks uniqueness, bounds and disparity range; throws std::invalid_argument naming the offending entry.
    void validate(int width, int height, double d_min, double d_max) const;
};

struct MetaDisparity {
    Pixel pos;
    int d = 0;
    double t = 0.0;
    double energy = 0.0;

    double value() const { return d + t; }
};

class DisparityField {
public:
    DisparityField() = default;
    DisparityField(int width, int height) : values_(width, height, 0.0f), valid_(width, height, 0) {}

    int width() const { return values_.width(); }
    int height() const { return values_.height(); }
    std::size_t size() const { return values_.size(); }

    bool valid(int x, int y) const { return valid_(x, y) != 0; }
    bool valid(std::size_t i) const { return valid_[i] != 0; }
    float value(int x, int y) const { return values_(x, y); }
    float value(std::size_t i) const { return values_[i]; }

    void set(int x, int y, double v) {
        values_(x, y) = static_cast<float>(v);
        valid_(x, y) = 1;
    }
    void set(std::size_t i, double v) {
        values_[i] = static_cast<float>(v);
        valid_[i] = 1;
    }
    void invalidate(int x, int y) {
        values_(x, y) = 0.0f;
        valid_(x, y) = 0;
    }
    void invalidate(std::size_t i) {
        values_[i] = 0.0f;
        valid_[i] = 0;
    }

    std::size_t valid_count() const;
    double density() const { return size() ? static_cast<double>(valid_count()) / static_cast<double>(size()) : 0.0; }

    const Image<float>& values() const { return values_; }
    const Mask& validity() const { return valid_; }

private:
    Image<float> values_;
    Mask valid_;
};

struct OcclusionMasks {
    Mask stereo_occ;  // cross-check failures
    Mask depth_occ;   // gaps in the initial map and refinement removals

    OcclusionMasks() = default;
    OcclusionMasks(int w, int h) : stereo_occ(w, h, 0), depth_occ(w, h, 0) {}
};

/// Zero-mean vectorised window (row-major), border samples replicated.
std::vector<double> window_vector(const Image<float>& img, Pixel center, int half);

class InfeasiblePixel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EmptySeedSet : public std::runtime_error {
public:
    EmptySeedSet() : std::runtime_error("no usable seeds in the sparse prior") {}
};

}  // namespace rsfusion
