#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lf/nn.hpp"
#include "lf/warp.hpp"

namespace lf {

enum class DisparitySource { gt, gt_noise, blockmatch };

const char* disparity_source_name(DisparitySource s);
DisparitySource disparity_source_from_name(const std::string& name);

// Flat JSON pipeline configuration. Unknown keys are rejected so typos fail
// loudly instead of silently using a default.
struct PipelineConfig {
    double dmax = 1.0;
    Kernel kernel = Kernel::linear;
    int channels = 1;
    int featureDim = 16;
    int fwHidden = 64;
    int fbHidden = 64;
    int frChannels = 16;
    bool normalizeWeights = true;
    bool normalizeConfidence = true;
    int patchSize = 32;
    int stride = 16;
    double lrInitial = 1e-4;
    double lrAfterDrop = 1e-5;
    long long dropAtStep = -1;  // -1: floor(0.8 * maxSteps)
    long long maxSteps = 1000;
    double lambda = 0.1;
    std::uint64_t seed = 1;
    int batchSize = 1;
    DisparitySource disparitySource = DisparitySource::gt;
    double noiseSigma = 0.5;
    std::vector<int> sources;  // empty: first and last view

    long long effectiveDropStep() const {
        return dropAtStep >= 0 ? dropAtStep : (maxSteps * 8) / 10;
    }
};

PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);
nlohmann::json config_to_json(const PipelineConfig& cfg);

// Architecture for a light field of U views: kValues covers every angular gap.
ArchConfig make_arch(const PipelineConfig& cfg, int numViews);

// Source indices for a light field of U views: the configured pair, or the
// two outermost views.
std::vector<int> resolve_sources(const PipelineConfig& cfg, int numViews);

}  // namespace lf
