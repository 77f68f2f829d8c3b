#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "rsfusion/initialization.hpp"

using namespace rsfusion;

namespace {

SparsePrior grid_prior(int w, int h, int step, const std::function<double(int, int)>& d) {
    SparsePrior p;
    for (int y = 0; y < h; y += step)
        for (int x = 0; x < w; x += step) p.entries.push_back({{x, y}, d(x, y)});
    return p;
}

// Flat-coloured box (0.8) on a flat background (0.2) with disparities 12 and 4.
struct BoxScene {
    int w = 120, h = 90;
    int x0 = 40, x1 = 80, y0 = 25, y1 = 65;
    double d_fg = 12.0, d_bg = 4.0;

    bool inside(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
    double d(int x, int y) const { return inside(x, y) ? d_fg : d_bg; }
    GrayImage image() const {
        Image<float> img(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) img(x, y) = inside(x, y) ? 0.8f : 0.2f;
        return GrayImage(img);
    }
};

double rms_error(const DisparityField& f, const BoxScene& s, std::size_t& count) {
    double e = 0.0;
    count = 0;
    for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
            if (!f.valid(x, y)) continue;
            const double diff = f.value(x, y) - s.d(x, y);
            e += diff * diff;
            ++count;
        }
    }
    return std::sqrt(e / static_cast<double>(count));
}

}  // namespace

TEST_CASE("refinement keeps a clean planar prior") {
    const SparsePrior p = grid_prior(100, 80, 8, [](int x, int y) { return 3.0 + 0.05 * x + 0.02 * y; });
    const RefineResult r = refine_sparse(p, 100, 80);
    CHECK(r.removed.empty());
    CHECK(r.kept.size() == p.size());
}

TEST_CASE("refinement removes a seed 20 px off its neighbourhood") {
    SparsePrior p = grid_prior(100, 80, 8, [](int x, int) { return 5.0 + 0.05 * x; });
    auto it = std::find_if(p.entries.begin(), p.entries.end(),
                           [](const SparseEntry& e) { return e.pos.x == 48 && e.pos.y == 40; });
    REQUIRE(it != p.entries.end());
    it->disparity += 20.0;
    const RefineResult r = refine_sparse(p, 100, 80);
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0] == Pixel{48, 40});
}

TEST_CASE("refinement keeps seeds without enough neighbours") {
    SparsePrior p;
    p.entries = {{{5, 5}, 3.0}, {{7, 5}, 30.0}, {{5, 7}, 3.0}};
    const RefineResult r = refine_sparse(p, 100, 100);
    CHECK(r.removed.empty());
}

TEST_CASE("upsampling a constant grid under uniform colour is constant") {
    const GrayImage guide(Image<float>(80, 60, 0.5f));
    const SparsePrior p = grid_prior(80, 60, 5, [](int, int) { return 7.25; });
    const DisparityField d0 = upsample(p, guide, UpsampleConfig{});
    CHECK(d0.valid_count() == d0.size());
    for (std::size_t i = 0; i < d0.size(); ++i) CHECK(d0.value(i) == doctest::Approx(7.25).epsilon(1e-6));
}

TEST_CASE("support threshold is relative to one coincident seed") {
    const GrayImage guide(Image<float>(41, 41, 0.5f));
    SparsePrior p;
    p.entries = {{{20, 20}, 3.0}};
    UpsampleConfig cfg;
    cfg.radius = 10;
    cfg.gamma_s = 5.0;
    cfg.e_c = 0.2;
    const SeedFilter f(p, guide, cfg);
    // exp(-r^2 / 50) >= 0.2  <=>  r^2 <= 50 ln 5 = 80.47
    CHECK(f.evaluate({20, 20}).has_value());
    CHECK(f.evaluate({28, 20}).has_value());   // r^2 = 64
    CHECK(f.evaluate({26, 26}).has_value());   // r^2 = 72
    CHECK_FALSE(f.evaluate({29, 20}).has_value());  // r^2 = 81
    CHECK_FALSE(f.evaluate({20, 31}).has_value());  // outside the radius
}

TEST_CASE("a seed-free disk leaves the centre invalid and marks it depth-occluded") {
    const int w = 120, h = 120;
    SparsePrior p;
    for (int y = 0; y < h; y += 4) {
        for (int x = 0; x < w; x += 4) {
            const double r = std::hypot(x - 60, y - 60);
            if (r > 2.0 * 10) p.entries.push_back({{x, y}, 6.0});
        }
    }
    const GrayImage guide(Image<float>(w, h, 0.4f));
    FusionParams prm;
    prm.upsample_radius = 10;
    const InitialMaps init = initial_maps(p, std::nullopt, guide, guide, prm);
    CHECK_FALSE(init.d0_left.valid(60, 60));
    CHECK(init.masks.depth_occ(60, 60) == 1);
    CHECK(init.d0_left.valid(10, 10));
}

TEST_CASE("colour weighting beats spatial-only filling at a coincident edge") {
    const BoxScene s;
    const SparsePrior p = grid_prior(s.w, s.h, 10, [&](int x, int y) { return s.d(x, y); });
    const GrayImage guide = s.image();
    UpsampleConfig colour;
    colour.radius = 12;
    colour.gamma_s = 6.0;
    colour.e_c = 0.0;
    UpsampleConfig spatial = colour;
    spatial.gamma_c = 1e12;
    std::size_t nc = 0, ns = 0;
    const double rc = rms_error(upsample(p, guide, colour), s, nc);
    const double rs = rms_error(upsample(p, guide, spatial), s, ns);
    CHECK(nc > 0);
    CHECK(ns > 0);
    CHECK(rc < rs);
}

TEST_CASE("mirroring moves seeds to the right view") {
    SparsePrior p;
    p.entries = {{{10, 3}, 4.0}, {{12, 3}, 2.0}, {{1, 0}, 2.6}, {{18, 1}, 5.0}};
    const SparsePrior m = mirror_prior(p, 20);
    // (10,3,4) and (12,3,2) both land on x = 14; the larger |d| wins. (18,1) leaves the image.
    REQUIRE(m.size() == 2);
    CHECK(m.entries[0].pos == Pixel{4, 0});
    CHECK(m.entries[0].disparity == doctest::Approx(-2.6));
    CHECK(m.entries[1].pos == Pixel{14, 3});
    CHECK(m.entries[1].disparity == -4.0);
}

TEST_CASE("consistent priors give an almost empty stereo-occlusion mask") {
    const int w = 100, h = 60;
    const SparsePrior p = grid_prior(w, h, 5, [](int, int) { return 5.0; });
    const GrayImage guide(Image<float>(w, h, 0.5f));
    FusionParams prm;
    const InitialMaps init = initial_maps(p, std::nullopt, guide, guide, prm);
    std::size_t flagged = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 5 < w - 5; ++x) flagged += init.masks.stereo_occ(x, y);
    CHECK(flagged == 0);
}

TEST_CASE("depth occlusions next to a foreground object lie near stereo occlusions") {
    // The depth sensor misses the background strip just right of the box, inside the band
    // that the right camera cannot see either.
    const BoxScene s;
    SparsePrior p;
    for (int y = 0; y < s.h; y += 2) {
        for (int x = 0; x < s.w; x += 2) {
            const bool hidden = x >= s.x1 && x < s.x1 + 8 && y >= s.y0 && y < s.y1;
            if (!hidden) p.entries.push_back({{x, y}, s.d(x, y)});
        }
    }
    FusionParams prm;
    prm.upsample_radius = 3;
    const GrayImage img = s.image();
    const InitialMaps init = initial_maps(p, std::nullopt, img, img, prm);
    std::size_t depth_occ = 0, covered = 0;
    for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
            if (!init.masks.depth_occ(x, y)) continue;
            ++depth_occ;
            bool near = false;
            for (int dy = -3; dy <= 3 && !near; ++dy)
                for (int dx = -3; dx <= 3 && !near; ++dx)
                    near = init.masks.stereo_occ.contains(x + dx, y + dy) && init.masks.stereo_occ.clamped(x + dx, y + dy);
            covered += near;
        }
    }
    REQUIRE(depth_occ > 0);
    CHECK(static_cast<double>(covered) >= 0.8 * static_cast<double>(depth_occ));
}

TEST_CASE("initial maps reject empty priors and mismatched images") {
    const GrayImage a(Image<float>(10, 10, 0.5f)), b(Image<float>(12, 10, 0.5f));
    CHECK_THROWS_AS(initial_maps(SparsePrior{}, std::nullopt, a, a, FusionParams{}), EmptySeedSet);
    SparsePrior p;
    p.entries = {{{1, 1}, 1.0}};
    CHECK_THROWS_AS(initial_maps(p, std::nullopt, a, b, FusionParams{}), std::invalid_argument);
}
