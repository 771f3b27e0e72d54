#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lf/config.hpp"
#include "lf/image.hpp"
#include "lf/interp.hpp"
#include "lf/loss.hpp"
#include "lf/nn.hpp"
#include "lf/tape.hpp"

namespace lf {

// One scene ready for training or reconstruction: ground truth, the sparse
// inputs with their working disparities (exact, perturbed, or estimated by
// block matching per config), precomputed source stacks, and the merged
// forward-warped disparity of every view.
struct SceneData {
    LightField3D gtViews;
    std::vector<DisparityMap> gtDisp;
    SparseInput inputs;
    std::vector<SourceContext> contexts;
    std::vector<int> novel;
    std::vector<DisparityMap> mergedDt;

    // contexts point into inputs, so copies and moves re-aim those pointers
    // at the new object's own images instead of the source's.
    SceneData() = default;
    SceneData(const SceneData& o)
        : gtViews(o.gtViews), gtDisp(o.gtDisp), inputs(o.inputs), contexts(o.contexts),
          novel(o.novel), mergedDt(o.mergedDt) {
        rebindContexts(o);
    }
    SceneData(SceneData&& o) noexcept
        : gtViews(std::move(o.gtViews)), gtDisp(std::move(o.gtDisp)),
          inputs(std::move(o.inputs)), contexts(std::move(o.contexts)),
          novel(std::move(o.novel)), mergedDt(std::move(o.mergedDt)) {
        rebindContexts(o);
    }
    SceneData& operator=(const SceneData& o) {
        if (this != &o) *this = SceneData(o);
        return *this;
    }
    SceneData& operator=(SceneData&& o) noexcept {
        if (this != &o) {
            gtViews = std::move(o.gtViews);
            gtDisp = std::move(o.gtDisp);
            inputs = std::move(o.inputs);
            contexts = std::move(o.contexts);
            novel = std::move(o.novel);
            mergedDt = std::move(o.mergedDt);
            rebindContexts(o);
        }
        return *this;
    }

  private:
    void rebindContexts(const SceneData& o) {
        for (auto& ctx : contexts) {
            for (std::size_t m = 0; m < o.inputs.sourceViews.size(); ++m)
                if (ctx.view == &o.inputs.sourceViews[m]) ctx.view = &inputs.sourceViews[m];
            for (std::size_t m = 0; m < o.inputs.sourceDisparities.size(); ++m)
                if (ctx.disp == &o.inputs.sourceDisparities[m])
                    ctx.disp = &inputs.sourceDisparities[m];
        }
    }
};

SceneData prepare_scene(const LightField3D& lf, const std::vector<DisparityMap>& gtDisp,
                        const PipelineConfig& cfg, std::uint64_t sceneSeed);

// Per-scene seed for dataset index idx, derived from a base seed. Shared by
// the dataset generator and trainer so runs are reproducible end to end.
std::uint64_t scene_seed(std::uint64_t base, std::size_t idx);

// Training-step graph for one crop: synthesizes every novel view on the
// patch, refines it, and assembles reconstruction + EPI-gradient losses.
// `total` averages the reconstruction term over novel views.
struct StepLossVars {
    ad::Var total;
    std::vector<LossReport> reports;  // one per novel view, in scene.novel order
};

StepLossVars build_step_loss(ad::Tape& tape, ParamVars& pv, const SceneData& scene,
                             int ox, int oy, const PipelineConfig& cfg,
                             const ArchConfig& arch);

struct TrainOutput {
    ModelParams params;
    ArchConfig arch;
    long long steps = 0;
};

// Adam training loop. Writes loss.ndjson and checkpoint.bin into outDir
// (plus checkpoint_stepNNNNNN.bin every ckptEvery steps when positive).
TrainOutput train_model(const std::vector<SceneData>& scenes, const PipelineConfig& cfg,
                        const std::string& outDir, long long ckptEvery = 0);

// Full novel view: strip synthesis plus optional patch refinement.
Image reconstruct_view(const SceneData& scene, int target, const ModelParams& params,
                       const ArchConfig& arch, const PipelineConfig& cfg, bool baseline,
                       bool refine, ViewSynthesis* partsOut = nullptr);

}  // namespace lf
