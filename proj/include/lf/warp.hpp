#pragma once

#include <string>
#include <vector>

#include "lf/image.hpp"

namespace lf {

enum class Kernel { linear, cubic };

const char* kernel_name(Kernel k);
Kernel kernel_from_name(const std::string& name);

struct WarpConfig {
    double dMax = 1.0;
    Kernel kernel = Kernel::linear;
};

// K integer source-column positions around x_t: {x_t - r .. x_t + r} with
// r = ceil(dMax * |s - t|), clamped to [0, W-1] after the ascending walk.
struct Neighborhood {
    int xt = 0, yt = 0;
    int K = 0;
    std::vector<int> coords;
};

// Replicate-boundary 1-D resampling along a row. linear = 2 taps,
// cubic = 4-tap Keys kernel (a = -0.5). Exact at integer x.
double sample_1d(const Image& img, double x, int y, Kernel kernel, int ch = 0);

// out(x,y) = src(x + d(x,y) * (s - t), y); d is the disparity of the output view.
Image backward_warp(const Image& src, const DisparityMap& disparityOfTarget, int s, int t,
                    Kernel kernel = Kernel::linear);

// I_hat_{s'->s}(x,y) = other(x + D_s(x,y) * (sPrime - s), y).
Image warp_source_to_source(const Image& other, const DisparityMap& Ds, int sPrime, int s,
                            Kernel kernel = Kernel::linear);

// Splat D_s to view t: target x = round(x_s + D_s(x_s) * (t - s)), larger
// disparity wins collisions, holes take the nearest valid pixel in the row
// (ties to the left).
DisparityMap forward_warp_disparity(const DisparityMap& Ds, int s, int t);

// Pixelwise max over per-source forward-warped maps (same z-rule as splat).
DisparityMap merge_disparities(const std::vector<DisparityMap>& maps);

Neighborhood make_neighborhood(int xt, int yt, int s, int t, const WarpConfig& cfg, int W);

// Forward-warp each source disparity to t, then backward-warp each source view
// with its warped map. One synthesized image per source.
std::vector<Image> baseline_synthesize(const SparseInput& inputs, int t, const WarpConfig& cfg);

}  // namespace lf
