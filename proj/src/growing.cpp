#include "rsfusion/growing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>
#include <queue>
#include <set>

#include "rsfusion/parallel.hpp"

namespace rsfusion {
namespace {

struct Entry {
    double energy;
    int idx;
    std::uint32_t gen;

    bool operator<(const Entry& o) const {
        if (energy != o.energy) return energy < o.energy;
        if (idx != o.idx) return idx < o.idx;
        return gen < o.gen;
    }
    bool operator>(const Entry& o) const { return o < *this; }
};

}  // namespace

struct GrowState::Queue {
    QueueKind kind;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    std::set<Entry> ordered;
    std::size_t live = 0;
    std::unique_ptr<PixelEvaluator> evaluator;
    const EnergyContext* evaluator_ctx = nullptr;

    explicit Queue(QueueKind k) : kind(k) {}

    void push(const Entry& e) {
        if (kind == QueueKind::BinaryHeap) {
            heap.push(e);
        } else {
            ordered.insert(e);
        }
    }
    bool empty() const { return kind == QueueKind::BinaryHeap ? heap.empty() : ordered.empty(); }
    Entry pop() {
        if (kind == QueueKind::BinaryHeap) {
            Entry e = heap.top();
            heap.pop();
            return e;
        }
        Entry e = *ordered.begin();
        ordered.erase(ordered.begin());
        return e;
    }
    PixelEvaluator& evaluator_for(const EnergyContext& ctx) {
        if (!evaluator || evaluator_ctx != &ctx) {
            evaluator = std::make_unique<PixelEvaluator>(ctx);
            evaluator_ctx = &ctx;
        }
        return *evaluator;
    }
};

GrowState::GrowState(int w, int h, const GrowOptions& opts)
    : width_(w), height_(h), opts_(opts), queue_(std::make_unique<Queue>(opts.queue)) {
    const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    visited_.assign(n, 0);
    assigned_.assign(n, 0);
    has_value_.assign(n, 0);
    seed_.assign(n, 0);
    generation_.assign(n, 0);
    meta_.assign(n, MetaDisparity{});
    parent_.assign(n, -1);
    assign_count_.assign(n, 0);
}

GrowState::GrowState(GrowState&&) noexcept = default;
GrowState& GrowState::operator=(GrowState&&) noexcept = default;
GrowState::~GrowState() = default;

std::size_t GrowState::pending() const { return queue_->live; }

void GrowState::push(int idx) {
    const auto i = static_cast<std::size_t>(idx);
    // A newer entry for the same pixel supersedes the older one.
    if (generation_[i] > 0) --queue_->live;
    ++generation_[i];
    queue_->push({meta_[i].energy, idx, generation_[i]});
    ++queue_->live;
}

GrowState GrowState::seed(const SparsePrior& prior, const EnergyContext& ctx, const GrowOptions& opts) {
    GrowState state(ctx.width(), ctx.height(), opts);
    PixelEvaluator& ev = state.queue_->evaluator_for(ctx);
    const FusionParams& prm = ctx.params;
    for (const auto& e : prior.entries) {
        if (!ctx.left.contains(e.pos.x, e.pos.y)) {
            ++state.stats_.seeds_dropped;
            continue;
        }
        const int idx = e.pos.y * ctx.width() + e.pos.x;
        const auto i = static_cast<std::size_t>(idx);
        ev.set_pixel(e.pos);
        if (ev.eta().infeasible() || state.seed_[i]) {
            ++state.stats_.seeds_dropped;
            continue;
        }
        const int d = std::clamp(static_cast<int>(std::lround(e.disparity)), prm.d_min, prm.d_max);
        const LocalEnergy le = ev.energy(d, /*allow_subpixel=*/false);
        state.meta_[i] = {e.pos, d, 0.0, le.energy};
        state.has_value_[i] = 1;
        state.seed_[i] = 1;
        state.push(idx);
        ++state.stats_.seeds_used;
        if (opts.record_trace) {
            state.trace_.push_back({GrowTraceEvent::Kind::Seed, 0, idx, -1, d, 0.0, le.energy});
        }
    }
    if (state.stats_.seeds_used == 0) throw EmptySeedSet();
    return state;
}

bool GrowState::expand(const EnergyContext& ctx) {
    Queue& q = *queue_;
    while (!q.empty()) {
        const Entry top = q.pop();
        const auto ti = static_cast<std::size_t>(top.idx);
        if (top.gen != generation_[ti] || visited_[ti]) continue;
        --q.live;
        visited_[ti] = 1;
        ++stats_.pops;
        if (opts_.record_trace) {
            const MetaDisparity& m = meta_[ti];
            trace_.push_back({GrowTraceEvent::Kind::Pop, stats_.pops, top.idx, parent_[ti], m.d, m.t, m.energy});
        }

        const FusionParams& prm = ctx.params;
        PixelEvaluator& ev = q.evaluator_for(ctx);
        const MetaDisparity parent = meta_[ti];
        const int px = top.idx % width_, py = top.idx / width_;
        const std::array<Pixel, 4> neighbours{{{px, py - 1}, {px - 1, py}, {px + 1, py}, {px, py + 1}}};
        for (const Pixel& nb : neighbours) {
            if (nb.x < 0 || nb.y < 0 || nb.x >= width_ || nb.y >= height_) continue;
            const int nidx = nb.y * width_ + nb.x;
            const auto ni = static_cast<std::size_t>(nidx);
            if (assigned_[ni] || ctx.masks.depth_occ[ni]) continue;
            ev.set_pixel(nb);
            if (ev.eta().infeasible()) continue;

            const int lo = std::max(prm.d_min, parent.d - prm.r);
            const int hi = std::min(prm.d_max, parent.d + prm.r);
            int best_d = lo;
            LocalEnergy best{std::numeric_limits<double>::infinity(), 0.0};
            for (int d = lo; d <= hi; ++d) {
                const LocalEnergy le = ev.energy(d);
                const bool closer = std::abs(d - parent.d) < std::abs(best_d - parent.d);
                if (le.energy < best.energy || (le.energy == best.energy && closer)) {
                    best = le;
                    best_d = d;
                }
            }
            if (!(best.energy < prm.T)) {
                ++stats_.rejected;
                continue;
            }
            assigned_[ni] = 1;
            has_value_[ni] = 1;
            seed_[ni] = 0;
            meta_[ni] = {nb, best_d, best.t, best.energy};
            parent_[ni] = top.idx;
            ++assign_count_[ni];
            ++stats_.assigned;
            if (opts_.record_trace) {
                trace_.push_back(
                    {GrowTraceEvent::Kind::Assign, stats_.pops, nidx, top.idx, best_d, best.t, best.energy});
            }
            if (!visited_[ni]) push(nidx);
        }
        return true;
    }
    return false;
}

DisparityField GrowState::disparity() const {
    DisparityField out(width_, height_);
    for (std::size_t i = 0; i < meta_.size(); ++i) {
        if (has_value_[i]) out.set(i, meta_[i].value());
    }
    return out;
}

GrowResult grow(const SparsePrior& prior, const EnergyContext& ctx, const GrowOptions& opts) {
    GrowState state = GrowState::seed(prior, ctx, opts);
    while (state.expand(ctx)) {
    }
    GrowResult out;
    out.disparity = state.disparity();
    const auto n = static_cast<std::size_t>(ctx.width()) * static_cast<std::size_t>(ctx.height());
    out.meta.resize(n);
    out.has_value.resize(n);
    out.seed.resize(n);
    out.parent.resize(n);
    out.assign_count.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int idx = static_cast<int>(i);
        out.meta[i] = state.meta(idx);
        out.has_value[i] = state.has_value(idx);
        out.seed[i] = state.is_seed(idx);
        out.parent[i] = state.parent(idx);
        out.assign_count[i] = state.assign_count(idx);
    }
    out.stats = state.stats();
    out.trace = state.trace();
    return out;
}

DisparityField wta_baseline(const EnergyContext& ctx, std::vector<MetaDisparity>* meta) {
    const int w = ctx.width(), h = ctx.height();
    DisparityField out(w, h);
    if (meta) meta->assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), MetaDisparity{});
    const FusionParams& prm = ctx.params;
    parallel_rows(h, [&](int y) {
        PixelEvaluator ev(ctx);
        for (int x = 0; x < w; ++x) {
            ev.set_pixel({x, y});
            if (ev.eta().infeasible()) continue;
            int best_d = prm.d_min;
            LocalEnergy best{std::numeric_limits<double>::infinity(), 0.0};
            for (int d = prm.d_min; d <= prm.d_max; ++d) {
                const LocalEnergy le = ev.energy(d);
                if (le.energy < best.energy) {
                    best = le;
                    best_d = d;
                }
            }
            out.set(x, y, best_d + best.t);
            if (meta) (*meta)[out.values().index(x, y)] = {{x, y}, best_d, best.t, best.energy};
        }
    });
    return out;
}

void streak_fill(DisparityField& field, std::size_t* filled) {
    const int w = field.width(), h = field.height();
    std::size_t count = 0;
    std::vector<std::uint8_t> row_has(static_cast<std::size_t>(h), 0);
    for (int y = 0; y < h; ++y) {
        int last_valid = -1;
        for (int x = 0; x < w; ++x) {
            if (!field.valid(x, y)) continue;
            row_has[static_cast<std::size_t>(y)] = 1;
            const double right_v = field.value(x, y);
            for (int g = last_valid + 1; g < x; ++g) {
                const double v = last_valid >= 0 ? std::min<double>(field.value(last_valid, y), right_v) : right_v;
                field.set(g, y, v);
                ++count;
            }
            last_valid = x;
        }
        if (last_valid >= 0) {
            for (int g = last_valid + 1; g < w; ++g) {
                field.set(g, y, field.value(last_valid, y));
                ++count;
            }
        }
    }
    // Rows without any valid pixel copy the nearest filled row (upper row wins ties).
    for (int y = 0; y < h; ++y) {
        if (row_has[static_cast<std::size_t>(y)]) continue;
        for (int off = 1; off < h; ++off) {
            int src = -1;
            if (y - off >= 0 && row_has[static_cast<std::size_t>(y - off)]) {
                src = y - off;
            } else if (y + off < h && row_has[static_cast<std::size_t>(y + off)]) {
                src = y + off;
            }
            if (src < 0) continue;
            for (int x = 0; x < w; ++x) field.set(x, y, field.value(x, src));
            count += static_cast<std::size_t>(w);
            break;
        }
    }
    if (filled) *filled = count;
}

PostFillResult post_fill(const DisparityField& field, const GrayImage& guide, const FusionParams& params,
                         double small_gap_fraction) {
    PostFillResult out;
    out.field = field;
    const int w = field.width(), h = field.height();
    const std::size_t total = field.size();
    SparsePrior valid_pixels;
    valid_pixels.entries.reserve(total);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (field.valid(x, y)) valid_pixels.entries.push_back({{x, y}, field.value(x, y)});
        }
    }
    if (valid_pixels.empty()) {
        out.no_valid_input = total > 0;
        return out;
    }
    if (valid_pixels.size() == total) return out;

    // Connected invalid components (4-neighbourhood).
    std::vector<int> label(total, -1);
    std::vector<std::vector<int>> components;
    for (std::size_t start = 0; start < total; ++start) {
        if (field.valid(start) || label[start] >= 0) continue;
        const int id = static_cast<int>(components.size());
        components.emplace_back();
        std::deque<int> todo{static_cast<int>(start)};
        label[start] = id;
        while (!todo.empty()) {
            const int i = todo.front();
            todo.pop_front();
            components.back().push_back(i);
            const int x = i % w, y = i / w;
            const std::array<std::pair<int, int>, 4> nbs{{{x, y - 1}, {x - 1, y}, {x + 1, y}, {x, y + 1}}};
            for (auto [nx, ny] : nbs) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const auto j = static_cast<std::size_t>(ny) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx);
                if (field.valid(j) || label[j] >= 0) continue;
                label[j] = id;
                todo.push_back(static_cast<int>(j));
            }
        }
    }

    const double limit = small_gap_fraction * static_cast<double>(total);
    std::vector<int> small;
    for (const auto& comp : components) {
        if (static_cast<double>(comp.size()) <= limit) small.insert(small.end(), comp.begin(), comp.end());
    }
    if (!small.empty()) {
        const SeedFilter filter(valid_pixels, guide, UpsampleConfig::from(params));
        std::vector<std::optional<double>> values(small.size());
        for (std::size_t k = 0; k < small.size(); ++k) values[k] = filter.evaluate({small[k] % w, small[k] / w});
        for (std::size_t k = 0; k < small.size(); ++k) {
            if (values[k]) {
                out.field.set(static_cast<std::size_t>(small[k]), *values[k]);
                ++out.filter_filled;
            }
        }
    }
    streak_fill(out.field, &out.streak_filled);
    return out;
}

void write_trace_csv(std::ostream& os, const std::vector<GrowTraceEvent>& trace, int width) {
    os << "step,event,x,y,parent_x,parent_y,d,t,energy\n";
    for (const auto& ev : trace) {
        const char* kind = ev.kind == GrowTraceEvent::Kind::Seed ? "seed"
                           : ev.kind == GrowTraceEvent::Kind::Pop ? "pop"
                                                                   : "assign";
        os << ev.step << ',' << kind << ',' << ev.pixel % width << ',' << ev.pixel / width << ',';
        if (ev.parent >= 0) {
            os << ev.parent % width << ',' << ev.parent / width;
        } else {
            os << ",";
        }
        os << ',' << ev.d << ',' << ev.t << ',' << ev.energy << '\n';
    }
}

}  // namespace rsfusion
