#include <doctest.h>

#include <cmath>
#include <cstring>

#include "lf/oracle.hpp"
#include "lf/warp.hpp"

using namespace lf;

TEST_CASE("scene generation is deterministic") {
    SceneOracle a = gen_scene_random(9, 4, 24, 32, 2, 2.0);
    SceneOracle b = gen_scene_random(9, 4, 24, 32, 2, 2.0);
    for (int u = 0; u < 4; ++u)
        CHECK(std::memcmp(a.renders.views[u].data.data(), b.renders.views[u].data.data(),
                          a.renders.views[u].data.size() * sizeof(double)) == 0);
    SceneOracle c = gen_scene_random(10, 4, 24, 32, 2, 2.0);
    CHECK(a.renders.views[0].data != c.renders.views[0].data);
}

TEST_CASE("rendered values stay inside a safe band") {
    SceneOracle sc = gen_scene_random(21, 3, 32, 32, 3, 3.0);
    for (const Image& v : sc.renders.views)
        for (double p : v.data) {
            CHECK(p >= 0.1);
            CHECK(p <= 0.9);
        }
}

TEST_CASE("layer geometry validation") {
    CHECK_THROWS(gen_scene(1, 3, 8, 16, {LayerSpec{1.0, {{2, 5}}}}, 2.0));  // strips on background
    CHECK_THROWS(gen_scene(1, 3, 8, 16, {LayerSpec{3.0, {}}}, 2.0));       // exceeds dmax
    CHECK_THROWS(
        gen_scene(1, 3, 8, 16, {LayerSpec{0.5, {{2, 5}}}, LayerSpec{1.0, {}}}, 2.0));  // order
    CHECK_THROWS(gen_scene(1, 1, 8, 16, {LayerSpec{0.0, {}}}, 2.0));  // too few views
}

TEST_CASE("ground-truth disparity follows the visible layer") {
    SceneOracle sc =
        gen_scene(5, 3, 8, 32, {LayerSpec{2.0, {{10, 18}}}, LayerSpec{0.0, {}}}, 2.0);
    // view u: front strip occupies [10 + 2u, 18 + 2u)
    for (int u = 0; u < 3; ++u)
        for (int x = 0; x < 32; ++x) {
            double want = (x >= 10 + 2 * u && x < 18 + 2 * u) ? 2.0 : 0.0;
            CHECK(sc.gtDisparity[u].at(x, 3) == want);
        }
}

TEST_CASE("disocclusion band is exactly d*(s-t) pixels wide") {
    SceneOracle sc =
        gen_scene(5, 3, 8, 32, {LayerSpec{2.0, {{10, 18}}}, LayerSpec{0.0, {}}}, 2.0);
    // warping s -> t=0: background pixels of view 0 whose correspondent is
    // covered by the front strip in view s, i.e. x in [18, 18 + 2s)
    for (int s : {1, 2}) {
        const auto& mask = sc.occlusion(0, s);
        for (int x = 0; x < 32; ++x) {
            bool inBand = x >= 18 && x < 18 + 2 * s;
            CHECK(static_cast<bool>(mask[2 * 32 + x]) == inBand);
        }
    }
}

TEST_CASE("masked correspondence error is tiny, flagged error is real") {
    SceneOracle sc = gen_scene_random(31, 5, 48, 48, 2, 3.0);
    int flagged = 0, flaggedBig = 0, outOfView = 0;
    for (int t = 0; t < 5; ++t)
        for (int s = 0; s < 5; ++s) {
            if (s == t) continue;
            Image warped = backward_warp(sc.renders.views[s], sc.gtDisparity[t], s, t);
            const auto& mask = sc.occlusion(t, s);
            const auto& fov = sc.out_of_fov(t, s);
            for (int y = 0; y < 48; ++y)
                for (int x = 0; x < 48; ++x) {
                    double err = std::fabs(warped.at(x, y) - sc.renders.views[t].at(x, y));
                    if (fov[y * 48 + x]) {
                        ++outOfView;
                        CHECK(!mask[y * 48 + x]);  // the two masks are disjoint
                    } else if (mask[y * 48 + x]) {
                        ++flagged;
                        if (err > 0.05) ++flaggedBig;
                    } else {
                        CHECK(err < 0.05);
                    }
                }
        }
    REQUIRE(flagged > 0);
    REQUIRE(outOfView > 0);
    CHECK(static_cast<double>(flaggedBig) / flagged >= 0.95);
}

TEST_CASE("block matching recovers a constant disparity") {
    SceneOracle sc = gen_scene(13, 2, 32, 64, {LayerSpec{2.0, {}}}, 2.0);
    BlockMatchConfig cfg;
    cfg.searchRange = 2;
    DisparityMap est = estimate_disparity_bm(sc.renders.views[0], sc.renders.views[1], 0, 1, cfg);
    const int margin = 8;
    int total = 0, good = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = margin; x < 64 - margin; ++x) {
            ++total;
            if (std::fabs(est.at(x, y) - 2.0) <= 0.5) ++good;
        }
    CHECK(static_cast<double>(good) / total >= 0.95);
}

TEST_CASE("block matching over a wider gap divides by the view distance") {
    SceneOracle sc = gen_scene(17, 3, 32, 64, {LayerSpec{1.0, {}}}, 1.0);
    BlockMatchConfig cfg;
    cfg.searchRange = 2;
    DisparityMap est = estimate_disparity_bm(sc.renders.views[0], sc.renders.views[2], 0, 2, cfg);
    const int margin = 8;
    int total = 0, good = 0;
    for (int y = 0; y < 32; ++y)
        for (int x = margin; x < 64 - margin; ++x) {
            ++total;
            if (std::fabs(est.at(x, y) - 1.0) <= 0.5) ++good;
        }
    CHECK(static_cast<double>(good) / total >= 0.95);
}

TEST_CASE("disparity perturbation") {
    DisparityMap d(4, 6);
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = 0.25 * static_cast<double>(i % 7);

    DisparityMap same = perturb_disparity(d, 0.0, 99, 3.0);
    CHECK(same.data == d.data);

    DisparityMap p1 = perturb_disparity(d, 0.5, 99, 3.0);
    DisparityMap p2 = perturb_disparity(d, 0.5, 99, 3.0);
    CHECK(p1.data == p2.data);
    CHECK(p1.data != d.data);

    DisparityMap p3 = perturb_disparity(d, 0.5, 100, 3.0);
    CHECK(p3.data != p1.data);

    DisparityMap clamped = perturb_disparity(d, 50.0, 7, 3.0);
    for (double v : clamped.data) {
        CHECK(v <= 3.0);
        CHECK(v >= -3.0);
    }
}
