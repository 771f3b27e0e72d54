#include "lf/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "lf/oracle.hpp"
#include "lf/refine.hpp"
#include "lf/rng.hpp"
#include "lf/warp.hpp"

namespace lf {

std::uint64_t scene_seed(std::uint64_t base, std::size_t idx) {
    return base ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(idx + 1));
}

SceneData prepare_scene(const LightField3D& lf, const std::vector<DisparityMap>& gtDisp,
                        const PipelineConfig& cfg, std::uint64_t sceneSeed) {
    lf.validate();
    const int U = lf.U();
    if (static_cast<int>(gtDisp.size()) != U)
        throw std::invalid_argument("prepare_scene: need a ground-truth disparity per view");

    const std::vector<int> sources = resolve_sources(cfg, U);
    SceneData sd;
    sd.gtViews = lf;
    sd.gtDisp = gtDisp;

    for (std::size_t m = 0; m < sources.size(); ++m) {
        const int s = sources[m];
        DisparityMap d;
        switch (cfg.disparitySource) {
            case DisparitySource::gt:
                d = gtDisp[static_cast<std::size_t>(s)];
                break;
            case DisparitySource::gt_noise:
                d = perturb_disparity(gtDisp[static_cast<std::size_t>(s)], cfg.noiseSigma,
                                      sceneSeed * 2 + m, cfg.dmax);
                break;
            case DisparitySource::blockmatch: {
                const int other = sources[1 - m];
                BlockMatchConfig bm;
                bm.searchRange =
                    static_cast<int>(std::ceil(cfg.dmax * std::abs(other - s)));
                d = estimate_disparity_bm(lf.views[static_cast<std::size_t>(s)],
                                          lf.views[static_cast<std::size_t>(other)], s, other, bm);
                break;
            }
        }
        sd.inputs.sourceIndices.push_back(s);
        sd.inputs.sourceViews.push_back(lf.views[static_cast<std::size_t>(s)]);
        sd.inputs.sourceDisparities.push_back(std::move(d));
    }
    sd.inputs.validate();
    sd.contexts = make_source_contexts(sd.inputs, cfg.kernel);

    for (int u = 0; u < U; ++u)
        if (std::find(sources.begin(), sources.end(), u) == sources.end())
            sd.novel.push_back(u);

    for (int u = 0; u < U; ++u) {
        std::vector<DisparityMap> warped;
        for (std::size_t m = 0; m < sources.size(); ++m)
            warped.push_back(
                forward_warp_disparity(sd.inputs.sourceDisparities[m], sources[m], u));
        sd.mergedDt.push_back(merge_disparities(warped));
    }
    return sd;
}

namespace {

Tensor crop_rows(const Image& img, int x0, int y0, int w, int h) {
    Tensor t({w * h, img.c});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < img.c; ++ch)
                t.at2(y * w + x, ch) = img.at(x0 + x, y0 + y, ch);
    return t;
}

Tensor crop_disp(const DisparityMap& d, int x0, int y0, int w, int h) {
    Tensor t({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) t.at2(y, x) = d.at(x0 + x, y0 + y);
    return t;
}

}  // namespace

StepLossVars build_step_loss(ad::Tape& tape, ParamVars& pv, const SceneData& scene,
                             int ox, int oy, const PipelineConfig& cfg,
                             const ArchConfig& arch) {
    const int U = scene.gtViews.U(), W = scene.gtViews.W(), H = scene.gtViews.H();
    const int P = std::min({cfg.patchSize, W, H});
    if (ox < 0 || oy < 0 || ox + P > W || oy + P > H)
        throw std::invalid_argument("build_step_loss: crop outside image");
    const PixelBlock blk{ox, oy, P, P};

    std::vector<ad::Var> featRows;
    for (const auto& ctx : scene.contexts)
        featRows.push_back(tape.rows_from_chw(content_net(tape, pv, ctx.stack, arch)));

    std::vector<Tensor> gtCrops;
    for (int u = 0; u < U; ++u)
        gtCrops.push_back(crop_chw(scene.gtViews.views[static_cast<std::size_t>(u)], ox, oy, P, P));

    std::vector<ad::Var> viewVars(static_cast<std::size_t>(U));
    for (std::size_t m = 0; m < scene.inputs.sourceIndices.size(); ++m)
        viewVars[static_cast<std::size_t>(scene.inputs.sourceIndices[m])] =
            tape.leaf(gtCrops[static_cast<std::size_t>(scene.inputs.sourceIndices[m])]);

    struct ViewTerms {
        ad::Var reconFinal, reconBlend;
        std::vector<ad::Var> perSource;
    };
    std::vector<ViewTerms> terms;

    for (int t : scene.novel) {
        BlockSynth bs =
            synthesize_block(tape, pv, scene.contexts, featRows, t, blk, arch, nullptr);

        const double dh = patch_disparity(scene.mergedDt[static_cast<std::size_t>(t)], ox, oy, P);
        std::vector<Tensor> srcPatches;
        for (std::size_t m = 0; m < scene.inputs.sourceIndices.size(); ++m) {
            const int sox = locate_source_origin(ox, dh, scene.inputs.sourceIndices[m], t, W, P);
            srcPatches.push_back(crop_chw(scene.inputs.sourceViews[m], sox, oy, P, P));
        }
        ad::Var refined =
            refine_net(tape, pv, tape.chw_from_rows(bs.blended, P, P), srcPatches, arch);
        viewVars[static_cast<std::size_t>(t)] = refined;

        const Tensor gtRows = crop_rows(scene.gtViews.views[static_cast<std::size_t>(t)], ox, oy, P, P);
        ViewTerms vt;
        vt.reconFinal = tape.mean_abs_diff(refined, gtCrops[static_cast<std::size_t>(t)]);
        vt.reconBlend = tape.mean_abs_diff(bs.blended, gtRows);
        for (const auto& sb : bs.sources)
            vt.perSource.push_back(tape.mean_abs_diff(sb.pixels, gtRows));
        terms.push_back(std::move(vt));
    }

    ad::Var epiSum;
    for (int u = 0; u + 1 < U; ++u) {
        const Tensor dCrop = crop_disp(scene.gtDisp[static_cast<std::size_t>(u)], ox, oy, P, P);
        ad::Var gPred = tape.epi_shift_diff(viewVars[static_cast<std::size_t>(u) + 1],
                                            viewVars[static_cast<std::size_t>(u)], dCrop);
        const Tensor gGt = epi_gradient_patch(gtCrops[static_cast<std::size_t>(u) + 1],
                                              gtCrops[static_cast<std::size_t>(u)], dCrop);
        ad::Var term = tape.mean_abs_diff(gPred, gGt);
        epiSum = epiSum.valid() ? tape.add(epiSum, term) : term;
    }
    ad::Var epiVar = tape.scale(epiSum, 1.0 / (U - 1));
    const double epiVal = tape.value(epiVar)[0];

    StepLossVars out;
    ad::Var reconSum;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        ad::Var viewRecon = tape.add(terms[i].reconFinal, terms[i].reconBlend);
        for (ad::Var psv : terms[i].perSource) viewRecon = tape.add(viewRecon, psv);
        reconSum = reconSum.valid() ? tape.add(reconSum, viewRecon) : viewRecon;

        std::vector<double> ps;
        for (ad::Var psv : terms[i].perSource) ps.push_back(tape.value(psv)[0]);
        out.reports.push_back(make_loss_report(tape.value(terms[i].reconFinal)[0],
                                               tape.value(terms[i].reconBlend)[0], std::move(ps),
                                               epiVal, cfg.lambda));
    }
    out.total = tape.add(tape.scale(reconSum, 1.0 / static_cast<double>(terms.size())),
                         tape.scale(epiVar, cfg.lambda));
    return out;
}

TrainOutput train_model(const std::vector<SceneData>& scenes, const PipelineConfig& cfg,
                        const std::string& outDir, long long ckptEvery) {
    if (scenes.empty()) throw std::invalid_argument("train_model: no scenes");
    const int U = scenes[0].gtViews.U();
    for (const auto& sc : scenes)
        if (sc.gtViews.U() != U)
            throw std::invalid_argument("train_model: scenes disagree on view count");

    const ArchConfig arch = make_arch(cfg, U);
    ModelParams params = init_model(arch, cfg.seed);
    AdamState adam(params);
    const LrSchedule sched{cfg.lrInitial, cfg.lrAfterDrop, cfg.effectiveDropStep()};
    Rng rng(cfg.seed);

    std::ofstream log(outDir + "/loss.ndjson");
    if (!log) throw std::runtime_error("cannot write loss log in " + outDir);

    const int M = ArchConfig::numSources;
    for (long long step = 1; step <= cfg.maxSteps; ++step) {
        const double lr = sched.at(step);
        ad::Tape tape(true);
        ParamVars pv(tape, params, true);

        ad::Var lossVar;
        double rF = 0, rB = 0, epi = 0;
        std::vector<double> rPs(static_cast<std::size_t>(M), 0.0);
        for (int b = 0; b < cfg.batchSize; ++b) {
            const int si = rng.uniform_int(static_cast<int>(scenes.size()));
            const SceneData& sc = scenes[static_cast<std::size_t>(si)];
            const int W = sc.gtViews.W(), H = sc.gtViews.H();
            const int P = std::min({cfg.patchSize, W, H});
            const int ox = rng.uniform_int(W - P + 1);
            const int oy = rng.uniform_int(H - P + 1);

            StepLossVars sl = build_step_loss(tape, pv, sc, ox, oy, cfg, arch);
            lossVar = lossVar.valid() ? tape.add(lossVar, sl.total) : sl.total;

            const double nv = static_cast<double>(sl.reports.size());
            for (const auto& rep : sl.reports) {
                rF += rep.reconFinal / nv;
                rB += rep.reconBlend / nv;
                for (int m = 0; m < M; ++m)
                    rPs[static_cast<std::size_t>(m)] +=
                        rep.reconPerSource[static_cast<std::size_t>(m)] / nv;
            }
            epi += sl.reports[0].epiLoss;
        }
        if (cfg.batchSize > 1) lossVar = tape.scale(lossVar, 1.0 / cfg.batchSize);
        tape.backward(lossVar);

        std::vector<const Tensor*> grads;
        for (const auto& name : params.names()) {
            const ad::Var* v = pv.find(name);
            grads.push_back(v ? tape.grad_ptr(*v) : nullptr);
        }
        adam.step(params, grads, lr);

        const double inv = 1.0 / cfg.batchSize;
        rF *= inv;
        rB *= inv;
        epi *= inv;
        double psSum = 0;
        for (auto& v : rPs) {
            v *= inv;
            psSum += v;
        }
        nlohmann::json line{{"step", step},
                            {"lr", lr},
                            {"reconFinal", rF},
                            {"reconBlend", rB},
                            {"reconPerSource", rPs},
                            {"epiLoss", epi},
                            {"total", rF + rB + psSum + cfg.lambda * epi}};
        log << line.dump() << "\n";

        if (ckptEvery > 0 && step % ckptEvery == 0) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "checkpoint_step%06lld.bin", step);
            save_checkpoint(outDir + "/" + buf, params, arch);
        }
    }
    log.flush();
    save_checkpoint(outDir + "/checkpoint.bin", params, arch);
    return {std::move(params), arch, cfg.maxSteps};
}

Image reconstruct_view(const SceneData& scene, int target, const ModelParams& params,
                       const ArchConfig& arch, const PipelineConfig& cfg, bool baseline,
                       bool refine, ViewSynthesis* partsOut) {
    ViewSynthesis vs = synthesize_view(scene.inputs, target, params, arch, baseline);
    Image img = vs.blended;
    if (refine)
        img = refine_image(vs.blended, scene.inputs, scene.mergedDt[static_cast<std::size_t>(target)],
                           target, params, arch, cfg.patchSize, cfg.stride);
    if (partsOut) *partsOut = std::move(vs);
    return img;
}

}  // namespace lf
