#pragma once

#include <vector>

#include "lf/image.hpp"
#include "lf/nn.hpp"
#include "lf/tape.hpp"

namespace lf {

// Patch origins 0, S, 2S, ... while origin + P <= extent, with extent - P
// appended when the last patch would not reach the edge. Every pixel is
// covered at least once.
std::vector<int> patch_origins(int extent, int p, int stride);

struct PatchGrid {
    int P = 0, stride = 0;
    std::vector<int> xs, ys;
};

PatchGrid make_patch_grid(int W, int H, int p, int stride);

// Mean of the target disparity over the patch.
double patch_disparity(const DisparityMap& dt, int ox, int oy, int p);

// Source-side patch origin: the patch center moved by dh * (s - t), rounded
// (ties away from zero) and clamped so the patch stays inside the image.
int locate_source_origin(int oxTarget, double dh, int s, int t, int W, int p);

// (C,h,w) crop, origin must be inside the image.
Tensor crop_chw(const Image& img, int x0, int y0, int w, int h);

// Refined full image: per-patch residual refinement, overlaps averaged.
// The average uses a shifted accumulation (first + sum(v - first) / count)
// so patches that agree exactly reproduce their value bit for bit.
Image refine_image(const Image& blended, const SparseInput& in, const DisparityMap& mergedDt,
                   int target, const ModelParams& params, const ArchConfig& arch,
                   int patchSize, int stride);

}  // namespace lf
