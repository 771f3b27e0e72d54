#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lf/image.hpp"

namespace lf {

// Fronto-parallel textured layer. Disparity is horizontal shift in pixels per
// unit angular step. Strips are half-open [begin,end) extents in the layer's
// own coordinate frame (= image x of view 0); an empty strip list means the
// layer covers everything (background).
struct LayerSpec {
    double disparity = 0.0;
    std::vector<std::pair<int, int>> strips;
};

// Procedurally generated scene with exact ground truth. Views are rendered
// analytically, so every non-occluded pixel satisfies the correspondence
// I_t(x, y) = I_s(x + d*(s - t), y) up to interpolation error of the
// band-limited texture.
struct SceneOracle {
    int U = 0, H = 0, W = 0;
    double dMax = 0.0;
    std::vector<LayerSpec> layers;  // front to back, strictly decreasing disparity

    LightField3D renders;
    std::vector<DisparityMap> gtDisparity;          // per view
    std::vector<std::vector<unsigned char>> visLayer;  // per view, H*W layer indices

    // occl[t*U+s][y*W+x] == 1 when the correspondent of (x, y) in view s is
    // covered by a nearer layer: one of its two linear interpolation taps
    // lands on a different layer. oov marks correspondents that leave the
    // image instead; there a clamped read may happen to land close, so the
    // two conditions are kept apart. Error statistics should skip both.
    std::vector<std::vector<unsigned char>> occl;
    std::vector<std::vector<unsigned char>> oov;

    const std::vector<unsigned char>& occlusion(int t, int s) const {
        return occl[static_cast<std::size_t>(t) * U + s];
    }
    const std::vector<unsigned char>& out_of_fov(int t, int s) const {
        return oov[static_cast<std::size_t>(t) * U + s];
    }
};

// Renders a scene from explicit layer geometry. Textures (DC level plus three
// low-frequency sinusoids) are drawn from the seed. Throws if any |disparity|
// exceeds dMax or the front-to-back order is not strictly decreasing.
SceneOracle gen_scene(std::uint64_t seed, int U, int H, int W,
                      std::vector<LayerSpec> specs, double dMax);

// Draws layer geometry too: a full background plus numLayers-1 strip layers,
// disparities on a 0.5 grid.
SceneOracle gen_scene_random(std::uint64_t seed, int U, int H, int W,
                             int numLayers, double dMax);

struct BlockMatchConfig {
    int window = 9;       // odd SAD window side
    int searchRange = 3;  // shifts tried: -searchRange .. +searchRange
};

// Horizontal block matching between two views of the same light field.
// Integer SAD search with parabolic sub-pixel refinement; the returned map
// holds disparity per unit angular step for view s.
DisparityMap estimate_disparity_bm(const Image& is, const Image& isPrime,
                                   int s, int sPrime, const BlockMatchConfig& cfg);

// Adds i.i.d. Gaussian noise, clamping the result to [-dMax, dMax].
// sigma == 0 returns the input unchanged.
DisparityMap perturb_disparity(const DisparityMap& d, double sigma,
                               std::uint64_t seed, double dMax);

}  // namespace lf
