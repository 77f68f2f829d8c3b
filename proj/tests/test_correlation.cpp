#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rsfusion/correlation.hpp"
#include "support.hpp"

using namespace rsfusion;
using rsfusion::testing::grid_maximize;
using rsfusion::testing::random_pair;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Direct transcription of the Pearson form on explicit vectors.
double ecc_direct(const TaylorPatchPair& p, double t) {
    std::vector<double> r(p.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = p.uR[i] + t * p.duR[i];
    return dot(p.uL, r) / std::sqrt(dot(p.uL, p.uL) * dot(r, r));
}

TaylorPatchPair scaled(const TaylorPatchPair& p, double k) {
    TaylorPatchPair out = p;
    for (auto* v : {&out.uL, &out.uR, &out.duL, &out.duR})
        for (double& x : *v) x *= k;
    return out;
}

// Images iL(x, y) = s(x + a, y), iR(x, y) = s(x + b, y) of a smooth profile.
std::pair<Image<float>, Image<float>> shifted_images(double a, double b, bool cubic) {
    auto s = [cubic](double x, double y) {
        if (cubic) {
            const double u = (x - 16.0) / 16.0;
            return 0.5 + 0.35 * u * u * u + 0.1 * u + 0.02 * y;
        }
        return 0.5 + 0.2 * std::sin(0.45 * x + 0.3 * y) + 0.1 * std::sin(0.23 * x - 0.5 * y);
    };
    Image<float> l(32, 24), r(32, 24);
    for (int y = 0; y < 24; ++y) {
        for (int x = 0; x < 32; ++x) {
            l(x, y) = static_cast<float>(s(x + a, y));
            r(x, y) = static_cast<float>(s(x + b, y));
        }
    }
    return {l, r};
}

}  // namespace

TEST_CASE("ecc of self and negated self") {
    std::mt19937_64 rng(1);
    TaylorPatchPair p = random_pair(rng);
    p.uR = p.uL;
    std::fill(p.duR.begin(), p.duR.end(), 0.0);
    CHECK(*ecc(p, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double& v : p.uR) v = -v;
    CHECK(*ecc(p, 0.0) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("ecc matches the direct vector formula and stays bounded") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ut(-0.99, 0.99);
    for (int k = 0; k < 10000; ++k) {
        const TaylorPatchPair p = random_pair(rng);
        const double t = ut(rng);
        const double v = *ecc(p, t);
        CHECK(std::abs(v) <= 1.0 + 1e-12);
        if (k < 500) CHECK(v == doctest::Approx(ecc_direct(p, t)).epsilon(1e-12));
    }
}

TEST_CASE("ecc maximiser with a flat right gradient returns t = 0") {
    std::mt19937_64 rng(3);
    TaylorPatchPair p = random_pair(rng);
    std::fill(p.duR.begin(), p.duR.end(), 0.0);
    const auto m = ecc_maximize(p);
    REQUIRE(m);
    CHECK(m->t == 0.0);
    CHECK(m->value == doctest::Approx(*ecc(p, 0.0)));
}

TEST_CASE("ecc maximiser agrees with a grid search") {
    std::mt19937_64 rng(4);
    for (int k = 0; k < 300; ++k) {
        const TaylorPatchPair p = random_pair(rng);
        const auto m = ecc_maximize(p);
        REQUIRE(m);
        const auto g = grid_maximize([&](double t) { return *ecc(p, t); }, -0.99, 0.99, 1e-4);
        CHECK(m->value >= g.value - 1e-12);
        CHECK(m->value - g.value <= 1e-6);
        CHECK(m->value >= *ecc(p, 0.0) - 1e-12);
    }
}

TEST_CASE("ecc recovers a +0.3 px shift of a cubic profile") {
    // Right pixel x + t shows s(x + t - 0.3), which equals the left sample s(x) at t = 0.3.
    const auto [l, r] = shifted_images(0.0, -0.3, true);
    const auto m = ecc_maximize(make_patch_pair(l, r, {16, 12}, 0, 4));
    REQUIRE(m);
    CHECK(m->t == doctest::Approx(0.3).epsilon(0.05 / 0.3));
}

TEST_CASE("emcc reduces to the Moravec coefficient at t = 0") {
    std::mt19937_64 rng(5);
    const TaylorPatchPair p = random_pair(rng);
    const double expected = 2.0 * dot(p.uL, p.uR) / (dot(p.uL, p.uL) + dot(p.uR, p.uR));
    CHECK(*emcc(p, 0.0) == doctest::Approx(expected).epsilon(1e-12));
    TaylorPatchPair same = p;
    same.uR = same.uL;
    std::fill(same.duL.begin(), same.duL.end(), 0.0);
    std::fill(same.duR.begin(), same.duR.end(), 0.0);
    CHECK(*emcc(same, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("emcc is bounded over random draws") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ut(-0.99, 0.99);
    for (int k = 0; k < 10000; ++k) {
        const TaylorPatchPair p = random_pair(rng);
        CHECK(std::abs(*emcc(p, ut(rng))) <= 1.0 + 1e-12);
    }
}

TEST_CASE("emcc rational form without gradients is constant") {
    std::mt19937_64 rng(7);
    TaylorPatchPair p = random_pair(rng);
    std::fill(p.duL.begin(), p.duL.end(), 0.0);
    std::fill(p.duR.begin(), p.duR.end(), 0.0);
    const RationalQuadratic f = emcc_as_rational(p);
    CHECK(f.a1 == 0.0);
    CHECK(f.a2 == 0.0);
    CHECK(f.b1 == 0.0);
    CHECK(f.b2 == 0.0);
    CHECK(f.a0 == doctest::Approx(2.0 * dot(p.uL, p.uR)));
    CHECK(f.b0 == doctest::Approx(dot(p.uL, p.uL) + dot(p.uR, p.uR)));
    const auto m = emcc_maximize(p);
    REQUIRE(m);
    CHECK(m->t == 0.0);
}

TEST_CASE("emcc rational form matches pointwise evaluation") {
    std::mt19937_64 rng(8);
    for (int k = 0; k < 100; ++k) {
        const TaylorPatchPair p = random_pair(rng);
        const RationalQuadratic f = emcc_as_rational(p);
        for (int i = 0; i <= 10; ++i) {
            const double t = -1.0 + 0.2 * i;
            CHECK(f(t) == doctest::Approx(*emcc(p, t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("scaling the pair scales the rational coefficients by k^2") {
    std::mt19937_64 rng(9);
    const TaylorPatchPair p = random_pair(rng);
    const RationalQuadratic f = emcc_as_rational(p), g = emcc_as_rational(scaled(p, 3.0));
    CHECK(g.a0 == doctest::Approx(9.0 * f.a0));
    CHECK(g.a1 == doctest::Approx(9.0 * f.a1));
    CHECK(g.a2 == doctest::Approx(9.0 * f.a2));
    CHECK(g.b0 == doctest::Approx(9.0 * f.b0));
    CHECK(g.b1 == doctest::Approx(9.0 * f.b1));
    CHECK(g.b2 == doctest::Approx(9.0 * f.b2));
}

TEST_CASE("criteria and maximisers are scale invariant") {
    std::mt19937_64 rng(10);
    for (int k = 0; k < 200; ++k) {
        const TaylorPatchPair p = random_pair(rng), q = scaled(p, 0.37);
        CHECK(std::abs(*ecc(p, 0.4) - *ecc(q, 0.4)) < 1e-10);
        CHECK(std::abs(*emcc(p, 0.4) - *emcc(q, 0.4)) < 1e-10);
        const auto a = ecc_maximize(p), b = ecc_maximize(q);
        CHECK(std::abs(a->t - b->t) < 1e-10);
        CHECK(std::abs(a->value - b->value) < 1e-10);
        const auto c = emcc_maximize(p), d = emcc_maximize(q);
        CHECK(std::abs(c->t - d->t) < 1e-10);
        CHECK(std::abs(c->value - d->value) < 1e-10);
    }
}

TEST_CASE("rational maximiser on hand-built functions") {
    // (1 - t^2) / 1
    const CorrelationMax a = maximize_rational_quadratic({1, 0, -1, 1, 0, 0}, {-1, 1});
    CHECK(a.t == 0.0);
    CHECK(a.value == 1.0);
    // t / (1 + t^2) has its stationary maximum at t = 1
    const RationalQuadratic f{0, 1, 0, 1, 0, 1};
    const CorrelationMax b = maximize_rational_quadratic(f, {-1, 1});
    const auto g = grid_maximize([&](double t) { return f(t); }, -1.0, 1.0, 1e-5);
    CHECK(std::abs(b.t - g.t) < 1e-4);
    CHECK(b.value == doctest::Approx(0.5));
    // constant function ties resolve to 0
    CHECK(maximize_rational_quadratic({2, 0, 0, 4, 0, 0}, {-1, 1}).t == 0.0);
}

TEST_CASE("rational maximiser agrees with a grid search on random coefficients") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ua(-1.0, 1.0), ub0(1.0, 2.0), ub(-0.4, 0.4);
    for (int k = 0; k < 2000; ++k) {
        const RationalQuadratic f{ua(rng), ua(rng), ua(rng), ub0(rng), ub(rng), ub(rng)};
        const CorrelationMax m = maximize_rational_quadratic(f, {-1, 1});
        const auto g = grid_maximize([&](double t) { return f(t); }, -1.0, 1.0, 1e-4);
        CHECK(m.value >= g.value - 1e-12);
        CHECK(m.value - g.value <= 1e-6);
    }
}

TEST_CASE("the root with C'(t) < 0 is the maximum, the other the minimum") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    while (checked < 500) {
        const RationalQuadratic f{u(rng), u(rng), u(rng), 2.0 + u(rng), u(rng), u(rng)};
        const auto [c0, c1, c2] = f.derivative_numerator();
        const double disc = c1 * c1 - 4 * c0 * c2;
        if (std::abs(c2) < 1e-3 || disc <= 1e-6) continue;
        const double t0 = (-c1 - std::sqrt(disc)) / (2 * c2);  // 2 c2 t0 + c1 = -sqrt(disc)
        const double t1 = (-c1 + std::sqrt(disc)) / (2 * c2);
        if (std::abs(t0) > 5 || std::abs(t1) > 5) continue;
        if (std::abs(f.denominator(t0)) < 0.1 || std::abs(f.denominator(t1)) < 0.1) continue;
        const double h = 1e-4;
        auto second = [&](double t) { return (f(t + h) - 2 * f(t) + f(t - h)) / (h * h); };
        const double exact0 = -std::sqrt(disc) / (f.denominator(t0) * f.denominator(t0));
        const double exact1 = std::sqrt(disc) / (f.denominator(t1) * f.denominator(t1));
        if (std::abs(exact0) < 1e-3 || std::abs(exact1) < 1e-3) continue;
        CHECK(second(t0) < 0.0);
        CHECK(second(t1) > 0.0);
        ++checked;
    }
}

TEST_CASE("emcc maximiser agrees with a grid search and improves on t = 0") {
    std::mt19937_64 rng(13);
    for (int k = 0; k < 300; ++k) {
        const TaylorPatchPair p = random_pair(rng);
        const auto m = emcc_maximize(p);
        REQUIRE(m);
        const auto g = grid_maximize([&](double t) { return *emcc(p, t); }, -0.99, 0.99, 1e-4);
        CHECK(m->value >= g.value - 1e-12);
        CHECK(m->value - g.value <= 1e-6);
        CHECK(m->value >= *emcc(p, 0.0) - 1e-12);
    }
}

TEST_CASE("emcc recovers the total shift of a symmetric construction") {
    // iL(x) = s(x + 0.15), iR(x) = s(x - 0.15): right pixel x + t matches left x at t = +0.3
    // under the left x <-> right x + d + t convention.
    const auto [l, r] = shifted_images(0.15, -0.15, false);
    const auto m = emcc_maximize(make_patch_pair(l, r, {16, 12}, 0, 4));
    REQUIRE(m);
    CHECK(std::abs(m->t - 0.3) <= 0.05);
}

TEST_CASE("patch pair vectors are zero-mean and use central differences") {
    const auto [l, r] = shifted_images(0.0, 0.0, false);
    const TaylorPatchPair p = make_patch_pair(l, r, {10, 10}, 3, 2);
    REQUIRE(p.size() == 25);
    for (const auto* v : {&p.uL, &p.uR, &p.duL, &p.duR}) {
        double s = 0.0;
        for (double x : *v) s += x;
        CHECK(std::abs(s) < 1e-9);
    }
    // Before mean removal, the centre derivative of the right window is (r(14) - r(12)) / 2.
    double mean = 0.0;
    for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) mean += 0.5 * (r(13 + dx + 1, 10 + dy) - r(13 + dx - 1, 10 + dy));
    mean /= 25.0;
    CHECK(p.duR[12] == doctest::Approx(0.5 * (r(14, 10) - r(12, 10)) - mean).epsilon(1e-6));
}

TEST_CASE("weights: identity, single-sample degeneracy and masked recomputation") {
    std::mt19937_64 rng(14);
    const TaylorPatchPair p = random_pair(rng);
    const std::vector<double> ones(p.size(), 1.0);
    const TaylorPatchPair same = apply_weights(p, ones);
    CHECK(same.uL == p.uL);
    CHECK(same.duR == p.duR);

    // A single surviving sample can only say +-1.
    std::vector<double> centre(p.size(), 0.0);
    centre[p.size() / 2] = 1.0;
    CHECK(std::abs(*ecc(apply_weights(p, centre), 0.0)) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> half(p.size(), 0.0);
    TaylorPatchPair sub;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i < p.size() / 2) {
            half[i] = 1.0;
            sub.uL.push_back(p.uL[i]);
            sub.uR.push_back(p.uR[i]);
            sub.duL.push_back(p.duL[i]);
            sub.duR.push_back(p.duR[i]);
        }
    }
    const TaylorPatchPair w = apply_weights(p, half);
    CHECK(*ecc(w, 0.2) == doctest::Approx(*ecc(sub, 0.2)).epsilon(1e-12));
    CHECK(*emcc(w, 0.2) == doctest::Approx(*emcc(sub, 0.2)).epsilon(1e-12));
    CHECK_THROWS_AS(apply_weights(p, std::vector<double>(3, 1.0)), std::invalid_argument);
}

TEST_CASE("degenerate windows report no correlation") {
    TaylorPatchPair flat;
    flat.uL.assign(9, 0.0);
    flat.uR.assign(9, 0.0);
    flat.duL.assign(9, 0.0);
    flat.duR.assign(9, 0.0);
    CHECK_FALSE(ecc(flat, 0.0));
    CHECK_FALSE(ecc_maximize(flat));
    CHECK_FALSE(emcc(flat, 0.0));
    CHECK_FALSE(emcc_maximize(flat));
    CHECK_FALSE(best_correlation(Criterion::ECC, PairMoments::from(flat), false));
}
