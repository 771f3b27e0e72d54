#include <doctest.h>

#include <cmath>
#include <vector>

#include "lf/interp.hpp"
#include "lf/nn.hpp"
#include "lf/oracle.hpp"
#include "lf/refine.hpp"
#include "lf/warp.hpp"

using namespace lf;

namespace {

SparseInput sparse_from(const SceneOracle& sc, int s0, int s1) {
    SparseInput in;
    in.sourceIndices = {s0, s1};
    in.sourceViews = {sc.renders.views[s0], sc.renders.views[s1]};
    in.sourceDisparities = {sc.gtDisparity[s0], sc.gtDisparity[s1]};
    return in;
}

DisparityMap merged_for(const SparseInput& in, int t) {
    std::vector<DisparityMap> warped;
    for (int m = 0; m < in.M(); ++m)
        warped.push_back(forward_warp_disparity(in.sourceDisparities[m],
                                                in.sourceIndices[m], t));
    return merge_disparities(warped);
}

}  // namespace

TEST_CASE("patch origins tile the extent and always reach the far edge") {
    CHECK(patch_origins(64, 32, 16) == std::vector<int>{0, 16, 32});
    CHECK(patch_origins(10, 4, 4) == std::vector<int>{0, 4, 6});
    CHECK(patch_origins(4, 4, 4) == std::vector<int>{0});
    CHECK(patch_origins(9, 4, 4) == std::vector<int>{0, 4, 5});
    CHECK_THROWS(patch_origins(3, 4, 4));
}

TEST_CASE("patch grid covers every pixel with the expected multiplicity") {
    PatchGrid g = make_patch_grid(64, 64, 32, 16);
    CHECK(g.xs == std::vector<int>{0, 16, 32});
    CHECK(g.ys == std::vector<int>{0, 16, 32});
    std::vector<int> cover(64 * 64, 0);
    for (int oy : g.ys)
        for (int ox : g.xs)
            for (int y = oy; y < oy + 32; ++y)
                for (int x = ox; x < ox + 32; ++x) ++cover[y * 64 + x];
    for (int v : cover) {
        CHECK(v >= 1);
        CHECK((v == 1 || v == 2 || v == 4));
    }
    CHECK(cover[0] == 1);            // corner: one patch each way
    CHECK(cover[20 * 64 + 2] == 2);  // y overlap only
    CHECK(cover[20 * 64 + 20] == 4);
}

TEST_CASE("source patch origin follows the mean disparity and stays inside") {
    CHECK(locate_source_origin(16, 1.5, 2, 0, 64, 32) == 19);
    CHECK(locate_source_origin(16, -1.5, 0, 2, 64, 32) == 19);
    CHECK(locate_source_origin(0, -3.0, 2, 0, 64, 32) == 0);    // clamped left
    CHECK(locate_source_origin(32, 3.0, 2, 0, 64, 32) == 32);   // clamped right
    CHECK(locate_source_origin(10, 0.0, 2, 0, 64, 32) == 10);
}

TEST_CASE("patch disparity is the plain mean") {
    DisparityMap d(4, 6);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 6; ++x) d.at(x, y) = x + 10.0 * y;
    // 2x2 patch at (1,1): values 11,12,21,22
    CHECK(patch_disparity(d, 1, 1, 2) == doctest::Approx(16.5).epsilon(1e-15));
}

TEST_CASE("chw crop keeps the channel plane layout") {
    Image img(5, 7, 3);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x)
            for (int ch = 0; ch < 3; ++ch) img.at(x, y, ch) = 100 * ch + 10 * y + x;
    Tensor t = crop_chw(img, 2, 1, 3, 2);
    CHECK(t.shape() == std::vector<int>{3, 2, 3});
    for (int ch = 0; ch < 3; ++ch)
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 3; ++x)
                CHECK(t.at3(ch, y, x) == img.at(2 + x, 1 + y, ch));
    CHECK_THROWS(crop_chw(img, 5, 0, 3, 2));
    CHECK_THROWS(crop_chw(img, -1, 0, 3, 2));
}

TEST_CASE("refinement is a bit exact identity at zero init") {
    SceneOracle sc = gen_scene(8101, 5, 20, 20,
                               {LayerSpec{1.0, {{6, 13}}}, LayerSpec{-0.5, {}}}, 2.0);
    SparseInput in = sparse_from(sc, 0, 4);
    ArchConfig arch;
    arch.dMax = 2.0;
    arch.frChannels = 8;
    arch.featureDim = 8;
    arch.kValues = k_values_for(2.0, 5);
    ModelParams params = init_model(arch, 5);  // residual tails at zero

    const int t = 2;
    const Image& blended = sc.renders.views[t];  // any image works as input
    Image out = refine_image(blended, in, merged_for(in, t), t, params, arch, 8, 4);
    REQUIRE(out.same_dims(blended));
    for (std::size_t i = 0; i < out.data.size(); ++i) CHECK(out.data[i] == blended.data[i]);
}

TEST_CASE("non overlapping patches reproduce a single refine pass") {
    SceneOracle sc = gen_scene(8102, 5, 16, 16,
                               {LayerSpec{1.0, {{5, 11}}}, LayerSpec{-0.5, {}}}, 2.0);
    SparseInput in = sparse_from(sc, 0, 4);
    ArchConfig arch;
    arch.dMax = 2.0;
    arch.frChannels = 8;
    arch.featureDim = 8;
    arch.kValues = k_values_for(2.0, 5);
    ModelParams params = init_model(arch, 6, true);

    const int t = 1, P = 8;
    const Image& blended = sc.renders.views[t];
    DisparityMap merged = merged_for(in, t);
    Image out = refine_image(blended, in, merged, t, params, arch, P, P);

    // redo patch (8, 0) by hand through the same net
    const int ox = 8, oy = 0;
    const double dh = patch_disparity(merged, ox, oy, P);
    std::vector<Tensor> srcPatches;
    for (int m = 0; m < 2; ++m) {
        const int sox = locate_source_origin(ox, dh, in.sourceIndices[m], t, 16, P);
        srcPatches.push_back(crop_chw(in.sourceViews[m], sox, oy, P, P));
    }
    ad::Tape tape(false);
    ParamVars pv(tape, params, false);
    ad::Var b = tape.leaf(crop_chw(blended, ox, oy, P, P));
    const Tensor& refined = tape.value(refine_net(tape, pv, b, srcPatches, arch));
    bool different = false;
    for (int y = 0; y < P; ++y)
        for (int x = 0; x < P; ++x) {
            CHECK(out.at(ox + x, oy + y, 0) == refined.at3(0, y, x));
            different = different || out.at(ox + x, oy + y, 0) != blended.at(ox + x, oy + y, 0);
        }
    CHECK(different);  // randomized residual actually changes the patch
}
