#include <cmath>

#include "doctest.h"
#include "test_support.hpp"

using namespace stitch;
using namespace testsup;

namespace {

// Blocky random texture with plenty of corners.
Image block_texture(int h, int w, std::uint64_t seed, int block = 8) {
    Image img(h, w);
    auto g = rng(seed);
    const int bh = (h + block - 1) / block, bw = (w + block - 1) / block;
    std::vector<double> lum(static_cast<std::size_t>(bh) * bw * 3);
    for (double& v : lum) v = uniform(g, 0.05, 0.95);
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int c = 0; c < 3; ++c)
                img.at(i, j, c) = lum[(static_cast<std::size_t>(i / block) * bw + j / block) * 3 + c];
    return img;
}

std::vector<Correspondence> exact_matches(const Homography& H, int n, std::uint64_t seed) {
    auto g = rng(seed);
    std::vector<Correspondence> ms;
    for (int k = 0; k < n; ++k) {
        const Point src{uniform(g, 0, 200), uniform(g, 0, 150)};
        ms.push_back({src, H.apply(src), 1.0});
    }
    return ms;
}

double h_distance(const Homography& a, const Homography& b) {
    const Homography an = a.normalized(), bn = b.normalized();
    double d = 0.0;
    for (int k = 0; k < 9; ++k) d = std::max(d, std::abs(an.h[k] - bn.h[k]));
    return d;
}

}  // namespace

TEST_CASE("homography basics and JSON round trip") {
    Homography H = Homography::translation(5, 3);
    const Point p = H.apply({1, 2});
    CHECK(p.x == doctest::Approx(6.0));
    CHECK(p.y == doctest::Approx(5.0));

    const Homography inv = H.inverse();
    const Point q = inv.apply(p);
    CHECK(q.x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q.y == doctest::Approx(2.0).epsilon(1e-12));

    const Homography back = homography_from_json(to_json(H));
    CHECK(h_distance(H, back) < 1e-12);
    CHECK_THROWS_AS(homography_from_json("[1,2,3]"), DataError);
    CHECK_THROWS_AS(homography_from_json("[0,0,0,0,0,0,0,0,0]"), DataError);
}

TEST_CASE("dlt_homography closed forms") {
    SUBCASE("unit square onto itself gives the identity") {
        std::vector<Correspondence> ms = {{{0, 0}, {0, 0}, 1},
                                          {{1, 0}, {1, 0}, 1},
                                          {{0, 1}, {0, 1}, 1},
                                          {{1, 1}, {1, 1}, 1}};
        const Homography H = dlt_homography(ms);
        CHECK(h_distance(H, Homography::identity()) < 1e-9);
    }
    SUBCASE("recovers a known translation exactly") {
        const Homography T = Homography::translation(5, 3);
        const Homography H = dlt_homography(exact_matches(T, 6, 11));
        CHECK(h_distance(H, T) < 1e-6);
        // Exact inputs reproject to machine precision.
        for (const Correspondence& m : exact_matches(T, 6, 11)) {
            const Point p = H.apply(m.src);
            CHECK(std::hypot(p.x - m.dst.x, p.y - m.dst.y) < 1e-6);
        }
    }
    SUBCASE("recovers a projective map") {
        Homography P;
        P.h = {1.02, 0.03, -4.0, -0.01, 0.98, 2.5, 1e-4, -2e-4, 1.0};
        const Homography H = dlt_homography(exact_matches(P, 8, 13));
        CHECK(h_distance(H, P) < 1e-6);
    }
    SUBCASE("three collinear source points are rejected by name") {
        std::vector<Correspondence> ms = {{{0, 0}, {0, 0}, 1},
                                          {{1, 1}, {1, 1}, 1},
                                          {{2, 2}, {2, 2}, 1},
                                          {{5, 0}, {5, 0}, 1}};
        CHECK_THROWS_WITH_AS(dlt_homography(ms),
                             doctest::Contains("collinear"), DataError);
    }
    SUBCASE("fewer than four matches are rejected") {
        CHECK_THROWS_AS(dlt_homography(exact_matches(Homography::identity(), 3, 1)),
                        DataError);
    }
}

TEST_CASE("detect_matches behavior") {
    SUBCASE("identical images match onto themselves") {
        const Image img = block_texture(96, 128, 21);
        const auto matches = detect_matches(img, img);
        REQUIRE(matches.size() >= 10);
        for (const Correspondence& m : matches) {
            CHECK(m.src.x == m.dst.x);
            CHECK(m.src.y == m.dst.y);
            CHECK(m.score == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
    SUBCASE("integer translation is recovered by most matches") {
        const Image scene = block_texture(120, 200, 22, 10);
        Image a(120, 180), b(120, 180);
        for (int i = 0; i < 120; ++i)
            for (int j = 0; j < 180; ++j)
                for (int c = 0; c < 3; ++c) {
                    a.at(i, j, c) = scene.at(i, j + 10, c);
                    b.at(i, j, c) = scene.at(i, j, c);
                }
        // A feature at column k of `a` sits at column k+10 of `b`.
        const auto matches = detect_matches(a, b);
        REQUIRE(matches.size() >= 20);
        int good = 0;
        for (const Correspondence& m : matches) {
            const double dx = m.dst.x - m.src.x, dy = m.dst.y - m.src.y;
            if (std::abs(dx - 10.0) <= 1.0 && std::abs(dy) <= 1.0) ++good;
        }
        CHECK(static_cast<double>(good) >= 0.8 * static_cast<double>(matches.size()));
    }
    SUBCASE("textureless images yield no matches") {
        const Image flat(64, 64, 0.5);
        CHECK(detect_matches(flat, flat).empty());
    }
    SUBCASE("tiny images are rejected") {
        CHECK_THROWS_AS(detect_matches(Image(16, 16), Image(64, 64)), DataError);
    }
}

TEST_CASE("ransac_homography") {
    const Homography T = Homography::translation(12, -7);
    SUBCASE("exact correspondences are all inliers") {
        const auto ms = exact_matches(T, 20, 31);
        const RansacResult r = ransac_homography(ms);
        CHECK(h_distance(r.H, T) < 1e-6);
        CHECK(r.inliers.size() == 20);
    }
    SUBCASE("planted outliers are rejected") {
        auto ms = exact_matches(T, 20, 32);
        auto g = rng(33);
        for (int k = 0; k < 10; ++k)
            ms.push_back({{uniform(g, 0, 200), uniform(g, 0, 150)},
                          {uniform(g, 0, 200), uniform(g, 0, 150)},
                          0.5});
        const RansacResult r = ransac_homography(ms);
        CHECK(h_distance(r.H, T) < 1e-6);
        CHECK(r.inliers.size() >= 20);
    }
    SUBCASE("pure noise fails across seeds") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto g = rng(1000 + seed);
            std::vector<Correspondence> ms;
            for (int k = 0; k < 30; ++k)
                ms.push_back({{uniform(g, 0, 512), uniform(g, 0, 512)},
                              {uniform(g, 0, 512), uniform(g, 0, 512)},
                              0.5});
            RansacConfig cfg;
            cfg.seed = seed;
            CHECK_THROWS_AS(ransac_homography(ms, cfg), DataError);
        }
    }
    SUBCASE("deterministic for a fixed seed") {
        auto ms = exact_matches(T, 15, 41);
        auto g = rng(42);
        for (int k = 0; k < 8; ++k)
            ms.push_back({{uniform(g, 0, 200), uniform(g, 0, 150)},
                          {uniform(g, 0, 200), uniform(g, 0, 150)},
                          0.5});
        const RansacResult a = ransac_homography(ms);
        const RansacResult b = ransac_homography(ms);
        CHECK(h_distance(a.H, b.H) == 0.0);
        CHECK(a.inliers == b.inliers);
    }
}

TEST_CASE("warp_pair geometry") {
    const Image target = block_texture(40, 60, 51);
    const Image reference = block_texture(40, 60, 52);

    SUBCASE("identity keeps everything valid and bit-identical") {
        const AlignedPair pair = warp_pair(target, reference, Homography::identity());
        CHECK(pair.height == 40);
        CHECK(pair.width == 60);
        CHECK(mask_count(pair.valid_t) == 40u * 60u);
        CHECK(mask_count(pair.valid_r) == 40u * 60u);
        CHECK(mask_count(pair.overlap) == 40u * 60u);
        for (std::size_t k = 0; k < target.data.size(); ++k)
            CHECK(pair.warped_target.data[k] == target.data[k]);
    }
    SUBCASE("half-width translation overlaps the expected strip") {
        const AlignedPair pair =
            warp_pair(target, reference, Homography::translation(30, 0));
        const double area = static_cast<double>(mask_count(pair.overlap));
        const double expected = 30.0 * 40.0;
        CHECK(std::abs(area - expected) <= 0.01 * expected + 40.0);
    }
    SUBCASE("disjoint footprints give an empty overlap") {
        const AlignedPair pair =
            warp_pair(target, reference, Homography::translation(200, 0));
        CHECK(mask_count(pair.overlap) == 0);
    }
    SUBCASE("overlap is contained in both validity masks") {
        const AlignedPair pair =
            warp_pair(target, reference, Homography::translation(17.3, 4.7));
        for (std::size_t k = 0; k < pair.overlap.data.size(); ++k)
            if (pair.overlap.data[k]) {
                CHECK(pair.valid_t.data[k] == 1);
                CHECK(pair.valid_r.data[k] == 1);
            }
        // Pixels outside validity are exactly zero.
        for (int i = 0; i < pair.height; ++i)
            for (int j = 0; j < pair.width; ++j)
                if (!pair.valid_t(i, j))
                    for (int c = 0; c < 3; ++c) CHECK(pair.warped_target.at(i, j, c) == 0.0);
    }
    SUBCASE("oversized canvases are rejected") {
        WarpConfig cfg;
        cfg.max_canvas_area = 100;
        CHECK_THROWS_AS(warp_pair(target, reference, Homography::identity(), cfg), DataError);
    }
}

TEST_CASE("warp round trip returns positions within 1e-6 px") {
    Homography H;
    H.h = {1.01, 0.02, 3.0, -0.015, 0.99, -2.0, 1e-5, 2e-5, 1.0};
    const Homography Hinv = H.inverse();
    auto g = rng(61);
    for (int k = 0; k < 100; ++k) {
        const Point p{uniform(g, 0, 500), uniform(g, 0, 500)};
        const Point q = Hinv.apply(H.apply(p));
        CHECK(std::hypot(q.x - p.x, q.y - p.y) < 1e-6);
    }
}

TEST_CASE("mask warping matches image warping") {
    const Image target = block_texture(40, 60, 71);
    const Image reference = block_texture(50, 70, 72);
    const Homography H = Homography::translation(25, 5);
    const AlignedPair pair = warp_pair(target, reference, H);

    BinaryMask m(40, 60, 0);
    for (int i = 10; i < 20; ++i)
        for (int j = 30; j < 44; ++j) m(i, j) = 1;
    const BinaryMask on_canvas = warp_mask_to_canvas(m, pair);
    // The translated block lands at (10+5, 30+25) in canvas coordinates.
    CHECK(mask_count(on_canvas) == mask_count(m));
    CHECK(on_canvas(15 + 5, 35 + 25) == 1);
    CHECK(on_canvas(9 + 5, 35 + 25) == 0);

    BinaryMask r(50, 70, 0);
    r(3, 4) = 1;
    const BinaryMask placed = place_reference_mask(r, pair);
    CHECK(placed(3, 4) == 1);
    CHECK(mask_count(placed) == 1);
}
