#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "rsfusion/correlation.hpp"
#include "rsfusion/growing.hpp"

namespace rsfusion::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("rsfusion_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline TaylorPatchPair random_pair(std::mt19937_64& rng, int side = 9) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto n = static_cast<std::size_t>(side) * side;
    TaylorPatchPair p;
    for (auto* v : {&p.uL, &p.uR, &p.duL, &p.duR}) {
        v->resize(n);
        for (auto& x : *v) x = u(rng);
    }
    return p;
}

struct GridMax {
    double t = 0.0;
    double value = -std::numeric_limits<double>::infinity();
};

/// Exhaustive search on lo, lo+step, ..., hi (hi included).
template <typename F>
GridMax grid_maximize(F&& f, double lo, double hi, double step) {
    GridMax best;
    const long n = std::lround((hi - lo) / step);
    for (long i = 0; i <= n; ++i) {
        const double t = i == n ? hi : lo + static_cast<double>(i) * step;
        const double v = f(t);
        if (v > best.value) best = {t, v};
    }
    return best;
}

/// Replays a growth trace and counts violations of the growing contract.
struct GrowthAudit {
    std::size_t pop_limit_violations = 0;
    std::size_t repeated_pops = 0;
    std::size_t multiple_assignments = 0;
    std::size_t range_violations = 0;    // |d_child - d_parent| > r
    std::size_t threshold_violations = 0;  // accepted energy >= T
    std::size_t orphan_assignments = 0;  // parent node not finalised before the child was created
    std::size_t final_mismatches = 0;    // final value differs from the last node of the pixel

    std::size_t total() const {
        return pop_limit_violations + repeated_pops + multiple_assignments + range_violations +
               threshold_violations + orphan_assignments + final_mismatches;
    }
};

inline GrowthAudit audit_growth(const GrowResult& g, const FusionParams& prm, int width, int height) {
    GrowthAudit a;
    const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (g.stats.pops > n) ++a.pop_limit_violations;
    std::vector<int> pops(n, 0), assigns(n, 0);
    std::vector<int> last_d(n, 0);
    std::vector<double> last_t(n, 0.0);
    std::vector<std::uint8_t> has(n, 0);
    int popped_pixel = -1, popped_d = 0;
    std::uint64_t pop_step = 0;
    for (const auto& ev : g.trace) {
        const auto i = static_cast<std::size_t>(ev.pixel);
        switch (ev.kind) {
            case GrowTraceEvent::Kind::Seed:
                has[i] = 1;
                last_d[i] = ev.d;
                last_t[i] = ev.t;
                break;
            case GrowTraceEvent::Kind::Pop:
                if (++pops[i] > 1) ++a.repeated_pops;
                if (!has[i] || last_d[i] != ev.d || last_t[i] != ev.t) ++a.orphan_assignments;
                popped_pixel = ev.pixel;
                popped_d = ev.d;
                pop_step = ev.step;
                break;
            case GrowTraceEvent::Kind::Assign:
                if (++assigns[i] > 1) ++a.multiple_assignments;
                if (ev.parent != popped_pixel || ev.step != pop_step) ++a.orphan_assignments;
                if (std::abs(ev.d - popped_d) > prm.r) ++a.range_violations;
                if (!(ev.energy < prm.T)) ++a.threshold_violations;
                has[i] = 1;
                last_d[i] = ev.d;
                last_t[i] = ev.t;
                break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (static_cast<bool>(has[i]) != static_cast<bool>(g.has_value[i])) {
            ++a.final_mismatches;
        } else if (has[i] && (g.meta[i].d != last_d[i] || g.meta[i].t != last_t[i])) {
            ++a.final_mismatches;
        }
        if (g.assign_count[i] > 1) ++a.multiple_assignments;
    }
    return a;
}

}  // namespace rsfusion::testing
