#include "lf/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lf {

SourceContext make_source_context(const SparseInput& in, int whichSource, Kernel kernel) {
    in.validate();
    const int other = 1 - whichSource;
    SourceContext ctx;
    ctx.s = in.sourceIndices[static_cast<std::size_t>(whichSource)];
    ctx.view = &in.sourceViews[static_cast<std::size_t>(whichSource)];
    ctx.disp = &in.sourceDisparities[static_cast<std::size_t>(whichSource)];
    ctx.warpedOther = warp_source_to_source(in.sourceViews[static_cast<std::size_t>(other)],
                                            *ctx.disp,
                                            in.sourceIndices[static_cast<std::size_t>(other)],
                                            ctx.s, kernel);
    const int H = ctx.view->h, W = ctx.view->w, C = ctx.view->c;
    ctx.stack = Tensor({2 * C + 1, H, W});
    for (int ch = 0; ch < C; ++ch)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                ctx.stack.at3(ch, y, x) = ctx.view->at(x, y, ch);
                ctx.stack.at3(C + ch, y, x) = ctx.warpedOther.at(x, y, ch);
            }
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) ctx.stack.at3(2 * C, y, x) = ctx.disp->at(x, y);
    return ctx;
}

std::vector<SourceContext> make_source_contexts(const SparseInput& in, Kernel kernel) {
    std::vector<SourceContext> ctxs;
    ctxs.push_back(make_source_context(in, 0, kernel));
    ctxs.push_back(make_source_context(in, 1, kernel));
    return ctxs;
}

EmbeddingBatch make_embedding_batch(const SourceContext& src, int t, PixelBlock blk,
                                    const ArchConfig& arch) {
    const int W = src.view->w, H = src.view->h, C = src.view->c;
    if (blk.x0 < 0 || blk.y0 < 0 || blk.x0 + blk.w > W || blk.y0 + blk.h > H)
        throw std::invalid_argument("make_embedding_batch: block outside image");
    const int dt = src.s - t;
    if (dt == 0) throw std::invalid_argument("make_embedding_batch: target equals source");
    const int r = static_cast<int>(std::ceil(arch.dMax * std::abs(dt)));
    const int K = 2 * r + 1;
    const int N = blk.w * blk.h;
    const double spaScale = 1.0 / (arch.dMax * std::abs(dt));

    EmbeddingBatch eb;
    eb.K = K;
    eb.constCols = Tensor({N * K, 4});
    eb.gatherIdx.resize(static_cast<std::size_t>(N) * K);
    eb.neighborValues = Tensor({N, K, C});

    int row = 0;
    for (int by = 0; by < blk.h; ++by) {
        const int yt = blk.y0 + by;
        for (int bx = 0; bx < blk.w; ++bx) {
            const int xt = blk.x0 + bx;
            const int pix = by * blk.w + bx;
            for (int k = 0; k < K; ++k, ++row) {
                const int xk = std::clamp(xt - r + k, 0, W - 1);
                eb.constCols.at2(row, 0) = src.disp->at(xk, yt);
                const double spa = xk - xt;
                eb.constCols.at2(row, 1) = spa;
                eb.constCols.at2(row, 2) = spa * spaScale;
                eb.constCols.at2(row, 3) = static_cast<double>(dt);
                eb.gatherIdx[static_cast<std::size_t>(row)] = yt * W + xk;
                for (int ch = 0; ch < C; ++ch)
                    eb.neighborValues.at3(pix, k, ch) = src.view->at(xk, yt, ch);
            }
        }
    }
    return eb;
}

SourceBlock synthesize_block_source(ad::Tape& t, ParamVars& p, const SourceContext& src,
                                    ad::Var featRows, int target, PixelBlock blk,
                                    const ArchConfig& arch, const Image* baselineImg) {
    EmbeddingBatch eb = make_embedding_batch(src, target, blk, arch);
    if (!arch.hasK(eb.K))
        throw std::invalid_argument("model has no blending head for K=" + std::to_string(eb.K));
    const int N = blk.w * blk.h, C = src.view->c;

    ad::Var constCols = t.leaf(std::move(eb.constCols));
    ad::Var ctt = t.gather_rows(featRows, std::move(eb.gatherIdx));
    ad::Var embed = t.concat({constCols, ctt}, 1);  // (N*K, 4+F)

    SourceBlock out;
    if (baselineImg) {
        Tensor pix({N, C});
        for (int by = 0; by < blk.h; ++by)
            for (int bx = 0; bx < blk.w; ++bx)
                for (int ch = 0; ch < C; ++ch)
                    pix.at2(by * blk.w + bx, ch) =
                        baselineImg->at(blk.x0 + bx, blk.y0 + by, ch);
        out.pixels = t.leaf(std::move(pix));
    } else {
        ad::Var raw = t.reshape(weight_mlp(t, p, embed), {N, eb.K});
        out.weights = arch.normalizeWeights ? t.softmax_lastdim(raw) : raw;
        out.pixels = t.weighted_sum_rows(out.weights, std::move(eb.neighborValues));
    }
    ad::Var perPixel = t.reshape(embed, {N, eb.K * arch.embedDim()});
    out.confLogit = blend_mlp(t, p, perPixel, eb.K);
    return out;
}

BlockSynth synthesize_block(ad::Tape& t, ParamVars& p, const std::vector<SourceContext>& srcs,
                            const std::vector<ad::Var>& featRows, int target, PixelBlock blk,
                            const ArchConfig& arch, const std::vector<Image>* baselineImgs) {
    BlockSynth bs;
    std::vector<ad::Var> logits, pixelVars;
    for (std::size_t m = 0; m < srcs.size(); ++m) {
        const Image* b = baselineImgs ? &(*baselineImgs)[m] : nullptr;
        bs.sources.push_back(
            synthesize_block_source(t, p, srcs[m], featRows[m], target, blk, arch, b));
        logits.push_back(bs.sources.back().confLogit);
        pixelVars.push_back(bs.sources.back().pixels);
    }
    ad::Var cat = t.concat(logits, 1);  // (N, M)
    bs.conf = arch.normalizeConfidence ? t.softmax_lastdim(cat) : cat;
    bs.blended = t.convex_blend(bs.conf, pixelVars);
    return bs;
}

Tensor content_features(const SourceContext& src, const ModelParams& params,
                        const ArchConfig& arch) {
    ad::Tape t(false);
    ParamVars p(t, params, false);
    return t.value(content_net(t, p, src.stack, arch));
}

namespace {

void write_block(Image& dst, const Tensor& rows, PixelBlock blk, int column = -1) {
    for (int by = 0; by < blk.h; ++by)
        for (int bx = 0; bx < blk.w; ++bx) {
            const int n = by * blk.w + bx;
            if (column >= 0) {
                dst.at(blk.x0 + bx, blk.y0 + by) = rows.at2(n, column);
            } else {
                for (int ch = 0; ch < dst.c; ++ch)
                    dst.at(blk.x0 + bx, blk.y0 + by, ch) = rows.at2(n, ch);
            }
        }
}

}  // namespace

ViewSynthesis synthesize_view(const SparseInput& in, int target, const ModelParams& params,
                              const ArchConfig& arch, bool baseline) {
    const std::vector<SourceContext> ctxs = make_source_contexts(in, arch.kernel);
    const int H = ctxs[0].view->h, W = ctxs[0].view->w, C = ctxs[0].view->c;

    std::vector<Tensor> feats;  // (H*W, F) per source
    for (const auto& ctx : ctxs) {
        ad::Tape t(false);
        ParamVars p(t, params, false);
        feats.push_back(t.value(t.rows_from_chw(content_net(t, p, ctx.stack, arch))));
    }

    std::vector<Image> baselineImgs;
    if (baseline)
        baselineImgs = baseline_synthesize(in, target, WarpConfig{arch.dMax, arch.kernel});

    ViewSynthesis vs;
    vs.blended = Image(H, W, C);
    vs.perSource.assign(ctxs.size(), Image(H, W, C));
    vs.confidence.assign(ctxs.size(), Image(H, W, 1));

    const int strip = 16;
    for (int y0 = 0; y0 < H; y0 += strip) {
        PixelBlock blk{0, y0, W, std::min(strip, H - y0)};
        ad::Tape t(false);
        ParamVars p(t, params, false);
        std::vector<ad::Var> featRows;
        for (const auto& f : feats) featRows.push_back(t.leaf(f));
        BlockSynth bs = synthesize_block(t, p, ctxs, featRows, target, blk, arch,
                                         baseline ? &baselineImgs : nullptr);
        write_block(vs.blended, t.value(bs.blended), blk);
        for (std::size_t m = 0; m < ctxs.size(); ++m) {
            write_block(vs.perSource[m], t.value(bs.sources[m].pixels), blk);
            write_block(vs.confidence[m], t.value(bs.conf), blk, static_cast<int>(m));
        }
    }
    return vs;
}

PixelSynth synthesize_pixel(const SparseInput& in, int target, int x, int y,
                            const ModelParams& params, const ArchConfig& arch,
                            bool baseline) {
    const std::vector<SourceContext> ctxs = make_source_contexts(in, arch.kernel);
    const int C = ctxs[0].view->c;

    std::vector<Tensor> feats;
    for (const auto& ctx : ctxs) {
        ad::Tape t(false);
        ParamVars p(t, params, false);
        feats.push_back(t.value(t.rows_from_chw(content_net(t, p, ctx.stack, arch))));
    }
    std::vector<Image> baselineImgs;
    if (baseline)
        baselineImgs = baseline_synthesize(in, target, WarpConfig{arch.dMax, arch.kernel});

    PixelBlock blk{x, y, 1, 1};
    ad::Tape t(false);
    ParamVars p(t, params, false);
    std::vector<ad::Var> featRows;
    for (const auto& f : feats) featRows.push_back(t.leaf(f));
    BlockSynth bs = synthesize_block(t, p, ctxs, featRows, target, blk, arch,
                                     baseline ? &baselineImgs : nullptr);

    PixelSynth ps;
    for (std::size_t m = 0; m < ctxs.size(); ++m) {
        const auto& sb = bs.sources[m];
        std::vector<double> w;
        if (sb.weights.valid()) {
            const Tensor& tw = t.value(sb.weights);
            for (int k = 0; k < tw.dim(1); ++k) w.push_back(tw.at2(0, k));
        }
        ps.weights.push_back(std::move(w));
        std::vector<double> px;
        for (int ch = 0; ch < C; ++ch) px.push_back(t.value(sb.pixels).at2(0, ch));
        ps.perSource.push_back(std::move(px));
        ps.conf.push_back(t.value(bs.conf).at2(0, static_cast<int>(m)));
    }
    for (int ch = 0; ch < C; ++ch) ps.blended.push_back(t.value(bs.blended).at2(0, ch));
    return ps;
}

}  // namespace lf
