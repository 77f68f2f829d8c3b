#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "rsfusion/io.hpp"
#include "support.hpp"

using namespace rsfusion;
using rsfusion::testing::TempDir;

namespace {

DisparityField random_field(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-40.0f, 80.0f);
    DisparityField f(w, h);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (rng() % 7 != 0) f.set(i, u(rng));
    }
    return f;
}

void check_same(const DisparityField& a, const DisparityField& b) {
    REQUIRE(a.width() == b.width());
    REQUIRE(a.height() == b.height());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.valid(i) == b.valid(i));
        if (a.valid(i)) CHECK(std::memcmp(&a.values()[i], &b.values()[i], sizeof(float)) == 0);
    }
}

}  // namespace

TEST_CASE("PFM round trip is bit exact for valid pixels") {
    const DisparityField f = random_field(37, 23, 1);
    std::stringstream ss;
    write_pfm(ss, f);
    check_same(f, read_pfm(ss));

    TempDir dir("io");
    write_pfm(dir.file("a.pfm"), f);
    check_same(f, read_pfm(dir.file("a.pfm")));
}

TEST_CASE("PFM layout: header, bottom-up rows, +inf for invalid") {
    DisparityField f(2, 2);
    f.set(0, 0, 1.0);
    f.set(1, 0, 2.0);
    f.set(0, 1, 3.0);
    std::stringstream ss;
    write_pfm(ss, f);
    const std::string s = ss.str();
    REQUIRE(s.rfind("Pf\n2 2\n-1.0\n", 0) == 0);
    float raster[4];
    std::memcpy(raster, s.data() + std::strlen("Pf\n2 2\n-1.0\n"), sizeof raster);
    CHECK(raster[0] == 3.0f);  // bottom row first
    CHECK(std::isinf(raster[1]));
    CHECK(raster[2] == 1.0f);
    CHECK(raster[3] == 2.0f);
}

TEST_CASE("PFM reader handles big-endian and colour files") {
    auto be = [](float v) {
        std::uint32_t u;
        std::memcpy(&u, &v, 4);
        std::string out(4, '\0');
        for (int k = 0; k < 4; ++k) out[static_cast<std::size_t>(k)] = static_cast<char>((u >> (24 - 8 * k)) & 0xFF);
        return out;
    };
    std::stringstream big;
    big << "Pf\n2 1\n1.0\n" << be(1.5f) << be(std::numeric_limits<float>::quiet_NaN());
    const DisparityField f = read_pfm(big);
    CHECK(f.value(0, 0) == 1.5f);
    CHECK_FALSE(f.valid(1, 0));

    std::stringstream colour;
    colour << "PF\n1 1\n-1.0\n";
    const float rgb[3] = {4.0f, 5.0f, 6.0f};
    colour.write(reinterpret_cast<const char*>(rgb), sizeof rgb);
    CHECK(read_pfm(colour).value(0, 0) == 4.0f);
}

TEST_CASE("PFM reader rejects malformed input") {
    std::stringstream bad_magic("P6\n1 1\n-1.0\n");
    CHECK_THROWS_AS(read_pfm(bad_magic), IoError);
    std::stringstream truncated("Pf\n4 4\n-1.0\nabc");
    CHECK_THROWS_AS(read_pfm(truncated), IoError);
    CHECK_THROWS_WITH_AS(read_pfm(std::string("/nonexistent/x.pfm")), doctest::Contains("/nonexistent/x.pfm"), IoError);
}

TEST_CASE("sparse CSV") {
    std::stringstream in("x,y,d\n# comment\n\n3,4,5.25\n 7 , 1 , -2  # trailing\n");
    const SparsePrior p = read_sparse_csv(in);
    REQUIRE(p.size() == 2);
    CHECK(p.entries[0].pos == Pixel{3, 4});
    CHECK(p.entries[0].disparity == 5.25);
    CHECK(p.entries[1].pos == Pixel{7, 1});
    CHECK(p.entries[1].disparity == -2.0);

    std::stringstream out;
    write_sparse_csv(out, p);
    CHECK(out.str() == "x,y,d\n3,4,5.25\n7,1,-2\n");

    std::stringstream frac("1.5,2,3\n");
    CHECK_THROWS_WITH_AS(read_sparse_csv(frac), doctest::Contains("integers"), IoError);
    std::stringstream garbage("1,2,3\nfoo\n");
    CHECK_THROWS_WITH_AS(read_sparse_csv(garbage), doctest::Contains("line 2"), IoError);
}

TEST_CASE("sparse prior files: CSV and PFM") {
    TempDir dir("prior");
    SparsePrior p;
    p.entries = {{{0, 0}, 1.25}, {{4, 2}, 7.5}};
    write_sparse_prior(dir.file("p.csv"), p);
    const SparsePrior back = read_sparse_prior(dir.file("p.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back.entries[1].disparity == 7.5);

    DisparityField f(5, 3);
    f.set(4, 2, 7.5);
    f.set(0, 0, 1.25);
    write_pfm(dir.file("p.pfm"), f);
    const SparsePrior from_pfm = read_sparse_prior(dir.file("p.pfm"));
    REQUIRE(from_pfm.size() == 2);
    CHECK(from_pfm.entries[0].pos == Pixel{0, 0});
    CHECK(from_pfm.entries[1].pos == Pixel{4, 2});
    CHECK_THROWS_AS(read_sparse_prior(dir.file("missing.csv")), IoError);
}

TEST_CASE("PNG images and masks") {
    TempDir dir("png");
    Image<float> img(16, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 16; ++x) img(x, y) = static_cast<float>((x + 16 * y) / 127.0);

    save_gray_png(dir.file("g16.png"), img, 16);
    const GrayImage g16 = load_image(dir.file("g16.png"));
    CHECK_FALSE(g16.color.has_value());
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(g16.luma[i] - img[i]) <= 0.5f / 65535.0f + 1e-7f);

    save_gray_png(dir.file("g8.png"), img, 8);
    const GrayImage g8 = load_image(dir.file("g8.png"));
    for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(g8.luma[i] - img[i]) <= 0.5f / 255.0f + 1e-7f);
    CHECK_THROWS_AS(save_gray_png(dir.file("bad.png"), img, 12), std::invalid_argument);

    Mask m(5, 4, 0);
    m(1, 2) = 1;
    m(4, 0) = 1;
    write_mask_png(dir.file("m.png"), m);
    CHECK(read_mask_png(dir.file("m.png")).data() == m.data());

    OcclusionMasks masks(16, 8);
    masks.stereo_occ(2, 2) = 1;
    masks.depth_occ(3, 3) = 1;
    write_masks_overlay_png(dir.file("overlay.png"), img, masks);
    const GrayImage overlay = load_image(dir.file("overlay.png"));
    REQUIRE(overlay.color.has_value());
    CHECK((*overlay.color)[0](2, 2) == 1.0f);  // red
    CHECK((*overlay.color)[2](3, 3) == 1.0f);  // blue

    CHECK_THROWS_AS(load_image(dir.file("none.png")), IoError);
}

TEST_CASE("disparity PNG encoding") {
    TempDir dir("disp");
    DisparityField f(3, 1);
    f.set(0, 0, 0.0);
    f.set(1, 0, 32.0);
    Mask occ(3, 1, 0);
    occ(2, 0) = 1;
    write_disparity_png(dir.file("d.png"), f, 0.0, 32.0, &occ);
    const GrayImage g = load_image(dir.file("d.png"));
    CHECK(std::lround(g.luma(0, 0) * 255) == 1);
    CHECK(std::lround(g.luma(1, 0) * 255) == 254);
    CHECK(std::lround(g.luma(2, 0) * 255) == 0);
    write_disparity_png(dir.file("e.png"), f, 0.0, 32.0);
    CHECK(std::lround(load_image(dir.file("e.png")).luma(2, 0) * 255) == 255);
}
