#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "rsfusion/core.hpp"
#include "rsfusion/energy.hpp"
#include "rsfusion/initialization.hpp"

namespace rsfusion {

/// Priority structure holding pending meta-disparities, ordered by (energy, row-major index).
enum class QueueKind { BinaryHeap, OrderedSet };

struct GrowOptions {
    QueueKind queue = QueueKind::BinaryHeap;
    bool record_trace = false;
};

/// Each Seed or Assign event creates one meta-disparity node. A Pop finalises the node
/// currently held by its pixel, and the Assign events that follow it are that node's
/// children. A seed popped before any neighbour reached it can still be assigned later;
/// the new node replaces the seed value while the seed's children keep their parent node.
struct GrowTraceEvent {
    enum class Kind { Seed, Pop, Assign };
    Kind kind = Kind::Seed;
    std::uint64_t step = 0;  // pop counter at the time of the event
    int pixel = -1;
    int parent = -1;
    int d = 0;
    double t = 0.0;
    double energy = 0.0;
};

struct GrowStats {
    std::uint64_t pops = 0;
    std::uint64_t seeds_used = 0;
    std::uint64_t seeds_dropped = 0;
    std::uint64_t assigned = 0;
    std::uint64_t rejected = 0;  // neighbour evaluations at or above T
};

class GrowState {
public:
    /// Evaluates the seeds at their rounded prior disparity with t = 0 and queues them.
    /// Seeds on infeasible pixels are dropped; throws EmptySeedSet when none remain.
    static GrowState seed(const SparsePrior& prior, const EnergyContext& ctx, const GrowOptions& opts = {});

    GrowState(GrowState&&) noexcept;
    GrowState& operator=(GrowState&&) noexcept;
    ~GrowState();

    /// Pops the lowest-energy unvisited entry and proposes to its unassigned 4-neighbours.
    /// Returns false when no unvisited entry remains.
    bool expand(const EnergyContext& ctx);

    int width() const { return width_; }
    int height() const { return height_; }
    bool visited(int idx) const { return visited_[static_cast<std::size_t>(idx)] != 0; }
    bool assigned(int idx) const { return assigned_[static_cast<std::size_t>(idx)] != 0; }
    bool has_value(int idx) const { return has_value_[static_cast<std::size_t>(idx)] != 0; }
    bool is_seed(int idx) const { return seed_[static_cast<std::size_t>(idx)] != 0; }
    const MetaDisparity& meta(int idx) const { return meta_[static_cast<std::size_t>(idx)]; }
    int parent(int idx) const { return parent_[static_cast<std::size_t>(idx)]; }
    int assign_count(int idx) const { return assign_count_[static_cast<std::size_t>(idx)]; }
    std::size_t pending() const;
    const GrowStats& stats() const { return stats_; }
    const std::vector<GrowTraceEvent>& trace() const { return trace_; }

    /// d* + t* where a value exists, invalid elsewhere.
    DisparityField disparity() const;

private:
    struct Queue;
    GrowState(int w, int h, const GrowOptions& opts);
    void push(int idx);

    int width_ = 0, height_ = 0;
    GrowOptions opts_;
    std::unique_ptr<Queue> queue_;
    std::vector<std::uint8_t> visited_, assigned_, has_value_, seed_;
    std::vector<std::uint32_t> generation_;
    std::vector<MetaDisparity> meta_;
    std::vector<int> parent_;
    std::vector<int> assign_count_;
    GrowStats stats_;
    std::vector<GrowTraceEvent> trace_;
};

struct GrowResult {
    DisparityField disparity;
    std::vector<MetaDisparity> meta;    // row-major, meaningful where has_value
    std::vector<std::uint8_t> has_value;
    std::vector<std::uint8_t> seed;     // value is an unreassigned seed
    std::vector<int> parent;            // pixel that proposed the final value; -1 for seeds and unset pixels
    std::vector<int> assign_count;      // number of grown assignments per pixel
    GrowStats stats;
    std::vector<GrowTraceEvent> trace;
};

GrowResult grow(const SparsePrior& prior, const EnergyContext& ctx, const GrowOptions& opts = {});

/// Independent per-pixel argmin of the local energy over the full disparity range.
/// Ties resolve to the smaller disparity. Infeasible pixels stay invalid.
DisparityField wta_baseline(const EnergyContext& ctx, std::vector<MetaDisparity>* meta = nullptr);

struct PostFillResult {
    DisparityField field;
    std::size_t filter_filled = 0;
    std::size_t streak_filled = 0;
    bool no_valid_input = false;
};

/// Fills small gaps (components up to `small_gap_fraction` of the image) with the upsampling
/// filter applied to the valid values, then streak-fills the rest along scanlines.
PostFillResult post_fill(const DisparityField& field, const GrayImage& guide, const FusionParams& params,
                         double small_gap_fraction = 0.005);

/// Scanline fill with the smaller of the nearest valid left/right values; rows without
/// valid pixels copy the nearest filled row.
void streak_fill(DisparityField& field, std::size_t* filled = nullptr);

void write_trace_csv(std::ostream& os, const std::vector<GrowTraceEvent>& trace, int width);

}  // namespace rsfusion
