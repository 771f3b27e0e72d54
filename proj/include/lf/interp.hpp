#pragma once

#include <vector>

#include "lf/image.hpp"
#include "lf/nn.hpp"
#include "lf/tape.hpp"
#include "lf/warp.hpp"

namespace lf {

// Everything the networks see of one source view: the image, its disparity,
// the other source warped onto it, and the stacked (2C+1,H,W) planes that
// feed the content net (view channels, warped-other channels, disparity).
struct SourceContext {
    int s = 0;
    const Image* view = nullptr;
    const DisparityMap* disp = nullptr;
    Image warpedOther;
    Tensor stack;
};

SourceContext make_source_context(const SparseInput& in, int whichSource, Kernel kernel);
std::vector<SourceContext> make_source_contexts(const SparseInput& in, Kernel kernel);

// Rectangular block of target pixels, processed pixel-major (y, then x),
// neighbors k ascending within each pixel.
struct PixelBlock {
    int x0 = 0, y0 = 0, w = 0, h = 0;
};

// Constant embedding columns (geo, spa, spaNorm, ang), feature gather rows
// and the neighborhood pixel values for one (source, target, block) triple.
struct EmbeddingBatch {
    int K = 0;
    Tensor constCols;            // (N*K, 4)
    std::vector<int> gatherIdx;  // N*K rows into the (H*W, F) feature matrix
    Tensor neighborValues;       // (N, K, C)
};

EmbeddingBatch make_embedding_batch(const SourceContext& src, int t, PixelBlock blk,
                                    const ArchConfig& arch);

// One source's synthesis of a block. In baseline mode `pixels` is a constant
// crop of a pre-warped image and `weights` is invalid; the confidence path is
// identical in both modes.
struct SourceBlock {
    ad::Var weights;    // (N, K) normalized (or raw) interpolation weights
    ad::Var pixels;     // (N, C)
    ad::Var confLogit;  // (N, 1)
};

SourceBlock synthesize_block_source(ad::Tape& t, ParamVars& p, const SourceContext& src,
                                    ad::Var featRows, int target, PixelBlock blk,
                                    const ArchConfig& arch, const Image* baselineImg);

struct BlockSynth {
    std::vector<SourceBlock> sources;
    ad::Var conf;     // (N, M)
    ad::Var blended;  // (N, C)
};

BlockSynth synthesize_block(ad::Tape& t, ParamVars& p, const std::vector<SourceContext>& srcs,
                            const std::vector<ad::Var>& featRows, int target, PixelBlock blk,
                            const ArchConfig& arch, const std::vector<Image>* baselineImgs);

// (F,H,W) content features of one source, computed off-tape.
Tensor content_features(const SourceContext& src, const ModelParams& params,
                        const ArchConfig& arch);

struct ViewSynthesis {
    Image blended;
    std::vector<Image> perSource;
    std::vector<Image> confidence;  // one channel per source
};

// Full novel view, unrefined. Features run once per source on the whole
// image; pixels are synthesized in row strips. Baseline mode replaces the
// dynamic per-source interpolation with forward/backward warping.
ViewSynthesis synthesize_view(const SparseInput& in, int target, const ModelParams& params,
                              const ArchConfig& arch, bool baseline = false);

// Single-pixel probe. Runs the identical code path on a 1x1 block, so values
// are bit-identical to the full-view synthesis.
struct PixelSynth {
    std::vector<std::vector<double>> weights;    // per source, K
    std::vector<std::vector<double>> perSource;  // per source, C
    std::vector<double> conf;                    // M
    std::vector<double> blended;                 // C
};

PixelSynth synthesize_pixel(const SparseInput& in, int target, int x, int y,
                            const ModelParams& params, const ArchConfig& arch,
                            bool baseline = false);

}  // namespace lf
