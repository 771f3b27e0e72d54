#include "lf/refine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lf {

std::vector<int> patch_origins(int extent, int p, int stride) {
    if (p > extent) throw std::invalid_argument("patch_origins: patch larger than extent");
    std::vector<int> xs;
    for (int o = 0; o + p <= extent; o += stride) xs.push_back(o);
    if (xs.back() != extent - p) xs.push_back(extent - p);
    return xs;
}

PatchGrid make_patch_grid(int W, int H, int p, int stride) {
    PatchGrid g;
    g.P = p;
    g.stride = stride;
    g.xs = patch_origins(W, p, stride);
    g.ys = patch_origins(H, p, stride);
    return g;
}

double patch_disparity(const DisparityMap& dt, int ox, int oy, int p) {
    double acc = 0.0;
    for (int y = oy; y < oy + p; ++y)
        for (int x = ox; x < ox + p; ++x) acc += dt.at(x, y);
    return acc / (static_cast<double>(p) * p);
}

int locate_source_origin(int oxTarget, double dh, int s, int t, int W, int p) {
    const int half = p / 2;
    const double center = oxTarget + half + dh * (s - t);
    const int cs = std::clamp(static_cast<int>(std::lround(center)), half, W - p + half);
    return cs - half;
}

Tensor crop_chw(const Image& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || x0 + w > img.w || y0 + h > img.h)
        throw std::invalid_argument("crop_chw: crop outside image");
    Tensor t({img.c, h, w});
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) t.at3(ch, y, x) = img.at(x0 + x, y0 + y, ch);
    return t;
}

Image refine_image(const Image& blended, const SparseInput& in, const DisparityMap& mergedDt,
                   int target, const ModelParams& params, const ArchConfig& arch,
                   int patchSize, int stride) {
    const int H = blended.h, W = blended.w, C = blended.c;
    const PatchGrid grid = make_patch_grid(W, H, std::min({patchSize, W, H}), stride);
    const int P = grid.P;

    Image first(H, W, C);
    Image delta(H, W, C);
    std::vector<int> count(static_cast<std::size_t>(H) * W, 0);

    for (int oy : grid.ys) {
        for (int ox : grid.xs) {
            const double dh = patch_disparity(mergedDt, ox, oy, P);
            std::vector<Tensor> srcPatches;
            for (int m = 0; m < in.M(); ++m) {
                const int sox = locate_source_origin(ox, dh, in.sourceIndices[static_cast<std::size_t>(m)],
                                                     target, W, P);
                srcPatches.push_back(crop_chw(in.sourceViews[static_cast<std::size_t>(m)], sox, oy, P, P));
            }
            ad::Tape t(false);
            ParamVars p(t, params, false);
            ad::Var b = t.leaf(crop_chw(blended, ox, oy, P, P));
            const Tensor& refined = t.value(refine_net(t, p, b, srcPatches, arch));

            for (int y = 0; y < P; ++y)
                for (int x = 0; x < P; ++x) {
                    const std::size_t pix = static_cast<std::size_t>(oy + y) * W + (ox + x);
                    for (int ch = 0; ch < C; ++ch) {
                        const double v = refined.at3(ch, y, x);
                        if (count[pix] == 0)
                            first.at(ox + x, oy + y, ch) = v;
                        else
                            delta.at(ox + x, oy + y, ch) += v - first.at(ox + x, oy + y, ch);
                    }
                    ++count[pix];
                }
        }
    }

    Image out(H, W, C);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const std::size_t pix = static_cast<std::size_t>(y) * W + x;
            for (int ch = 0; ch < C; ++ch)
                out.at(x, y, ch) = first.at(x, y, ch) + delta.at(x, y, ch) / count[pix];
        }
    return out;
}

}  // namespace lf
