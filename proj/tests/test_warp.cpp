#include <doctest.h>

#include <cmath>
#include <vector>

#include "lf/oracle.hpp"
#include "lf/rng.hpp"
#include "lf/warp.hpp"

using namespace lf;

namespace {

Image ramp_row(int w, double a, double b) {
    Image img(1, w, 1);
    for (int x = 0; x < w; ++x) img.at(x, 0) = a + b * x;
    return img;
}

}  // namespace

TEST_CASE("kernel names round trip") {
    CHECK(kernel_from_name("linear") == Kernel::linear);
    CHECK(kernel_from_name("cubic") == Kernel::cubic);
    CHECK(kernel_name(Kernel::linear) == std::string("linear"));
    CHECK(kernel_name(Kernel::cubic) == std::string("cubic"));
    CHECK_THROWS(kernel_from_name("nearest"));
}

TEST_CASE("sampling is exact at integer positions") {
    Rng rng(1);
    Image img(2, 9, 1);
    for (double& v : img.data) v = rng.uniform();
    for (int x = 0; x < 9; ++x) {
        CHECK(sample_1d(img, x, 1, Kernel::linear) == img.at(x, 1));
        CHECK(sample_1d(img, x, 1, Kernel::cubic) == img.at(x, 1));
    }
}

TEST_CASE("linear sampling interpolates and replicates the boundary") {
    Image img = ramp_row(5, 0.1, 0.2);
    CHECK(sample_1d(img, 1.25, 0, Kernel::linear) ==
          doctest::Approx(0.1 + 0.2 * 1.25).epsilon(1e-15));
    CHECK(sample_1d(img, -3.0, 0, Kernel::linear) == img.at(0, 0));
    CHECK(sample_1d(img, 11.5, 0, Kernel::linear) == img.at(4, 0));
}

TEST_CASE("cubic sampling reproduces linear ramps in the interior") {
    Image img = ramp_row(8, 0.3, 0.05);
    for (double x : {1.5, 2.25, 3.875, 5.0}) {
        CHECK(sample_1d(img, x, 0, Kernel::cubic) ==
              doctest::Approx(0.3 + 0.05 * x).epsilon(1e-13));
    }
}

TEST_CASE("sampling validates its inputs") {
    Image img(1, 4, 1);
    CHECK_THROWS(sample_1d(img, std::nan(""), 0, Kernel::linear));
    CHECK_THROWS(sample_1d(img, 1.0, 2, Kernel::linear));
}

TEST_CASE("backward warp shifts by d*(s-t)") {
    Rng rng(2);
    Image src(3, 12, 1);
    for (double& v : src.data) v = rng.uniform();
    DisparityMap d(3, 12, 2.0);  // constant integer disparity
    const int s = 3, t = 1;
    Image out = backward_warp(src, d, s, t, Kernel::linear);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 12; ++x) {
            int xs = x + 2 * (s - t);
            if (xs >= 12) xs = 11;  // replicate
            CHECK(out.at(x, y) == src.at(xs, y));
        }
}

TEST_CASE("forward splat matches a brute-force reference") {
    Rng rng(3);
    const int H = 4, W = 16, s = 0, t = 2;
    for (int trial = 0; trial < 10; ++trial) {
        DisparityMap d(H, W);
        for (double& v : d.data) v = 0.5 * rng.uniform_int(9) - 2.0;  // -2..2 step 0.5

        DisparityMap got = forward_warp_disparity(d, s, t);

        for (int y = 0; y < H; ++y) {
            std::vector<bool> valid(W, false);
            std::vector<double> ref(W, 0.0);
            for (int xs = 0; xs < W; ++xs) {
                double dv = d.at(xs, y);
                long xt = std::lround(xs + dv * (t - s));
                if (xt < 0 || xt >= W) continue;
                if (!valid[xt] || dv > ref[xt]) {
                    ref[xt] = dv;
                    valid[xt] = true;
                }
            }
            for (int x = 0; x < W; ++x) {
                if (valid[x]) continue;
                int best = -1, bestDist = 1 << 30;
                for (int xx = 0; xx < W; ++xx) {
                    if (!valid[xx]) continue;
                    int dist = std::abs(xx - x);
                    if (dist < bestDist || (dist == bestDist && xx < best)) {
                        best = xx;
                        bestDist = dist;
                    }
                }
                ref[x] = best >= 0 ? ref[best] : 0.0;
            }
            for (int x = 0; x < W; ++x) CHECK(got.at(x, y) == ref[x]);
        }
    }
}

TEST_CASE("forward splat of an all-out-of-range row is zero") {
    DisparityMap d(1, 4, 50.0);
    DisparityMap out = forward_warp_disparity(d, 0, 1);
    for (int x = 0; x < 4; ++x) CHECK(out.at(x, 0) == 0.0);
}

TEST_CASE("merge takes the pixelwise max") {
    DisparityMap a(2, 2), b(2, 2);
    a.data = {1, -2, 3, 0};
    b.data = {0, 5, -1, 0};
    DisparityMap m = merge_disparities({a, b});
    CHECK(m.data == std::vector<double>{1, 5, 3, 0});
}

TEST_CASE("neighborhood size, order, and clamping") {
    WarpConfig cfg;
    cfg.dMax = 3.0;
    Neighborhood n = make_neighborhood(10, 2, 4, 2, cfg, 64);
    const int r = 6;  // ceil(3*2)
    CHECK(n.K == 2 * r + 1);
    REQUIRE(static_cast<int>(n.coords.size()) == n.K);
    for (int k = 0; k < n.K; ++k) CHECK(n.coords[k] == 10 - r + k);

    Neighborhood edge = make_neighborhood(1, 0, 1, 0, cfg, 64);
    CHECK(edge.K == 7);
    CHECK(edge.coords == std::vector<int>{0, 0, 0, 1, 2, 3, 4});

    Neighborhood right = make_neighborhood(62, 0, 1, 0, cfg, 64);
    CHECK(right.coords == std::vector<int>{59, 60, 61, 62, 63, 63, 63});
}

TEST_CASE("baseline synthesis reproduces a single-layer scene away from borders") {
    SceneOracle sc = gen_scene(77, 3, 16, 48, {LayerSpec{1.5, {}}}, 2.0);
    SparseInput in;
    in.sourceIndices = {0, 2};
    for (int s : {0, 2}) {
        in.sourceViews.push_back(sc.renders.views[s]);
        in.sourceDisparities.push_back(sc.gtDisparity[s]);
    }
    WarpConfig cfg;
    cfg.dMax = 2.0;
    std::vector<Image> synth = baseline_synthesize(in, 1, cfg);
    REQUIRE(synth.size() == 2);
    const int margin = 4;
    for (std::size_t m = 0; m < 2; ++m)
        for (int y = 0; y < 16; ++y)
            for (int x = margin; x < 48 - margin; ++x)
                CHECK(std::abs(synth[m].at(x, y) - sc.renders.views[1].at(x, y)) <= 0.02);
}
