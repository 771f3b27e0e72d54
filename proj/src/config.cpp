#include "lf/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace lf {

using json = nlohmann::json;

const char* disparity_source_name(DisparitySource s) {
    switch (s) {
        case DisparitySource::gt: return "gt";
        case DisparitySource::gt_noise: return "gt_noise";
        case DisparitySource::blockmatch: return "blockmatch";
    }
    return "gt";
}

DisparitySource disparity_source_from_name(const std::string& name) {
    if (name == "gt") return DisparitySource::gt;
    if (name == "gt_noise") return DisparitySource::gt_noise;
    if (name == "blockmatch") return DisparitySource::blockmatch;
    throw std::invalid_argument("unknown disparitySource: " + name);
}

PipelineConfig config_from_json(const json& j) {
    static const std::set<std::string> known{
        "dmax",        "kernel",       "channels",           "featureDim",
        "fwHidden",    "fbHidden",     "frChannels",         "normalizeWeights",
        "normalizeConfidence", "patchSize", "stride",        "lrInitial",
        "lrAfterDrop", "dropAtStep",   "maxSteps",           "lambda",
        "seed",        "batchSize",    "disparitySource",    "noiseSigma",
        "sources"};
    if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw std::invalid_argument("config: unknown key \"" + it.key() + "\"");

    PipelineConfig c;
    if (j.contains("dmax")) c.dmax = j.at("dmax").get<double>();
    if (j.contains("kernel")) c.kernel = kernel_from_name(j.at("kernel").get<std::string>());
    if (j.contains("channels")) c.channels = j.at("channels").get<int>();
    if (j.contains("featureDim")) c.featureDim = j.at("featureDim").get<int>();
    if (j.contains("fwHidden")) c.fwHidden = j.at("fwHidden").get<int>();
    if (j.contains("fbHidden")) c.fbHidden = j.at("fbHidden").get<int>();
    if (j.contains("frChannels")) c.frChannels = j.at("frChannels").get<int>();
    if (j.contains("normalizeWeights")) c.normalizeWeights = j.at("normalizeWeights").get<bool>();
    if (j.contains("normalizeConfidence"))
        c.normalizeConfidence = j.at("normalizeConfidence").get<bool>();
    if (j.contains("patchSize")) c.patchSize = j.at("patchSize").get<int>();
    if (j.contains("stride")) c.stride = j.at("stride").get<int>();
    if (j.contains("lrInitial")) c.lrInitial = j.at("lrInitial").get<double>();
    if (j.contains("lrAfterDrop")) c.lrAfterDrop = j.at("lrAfterDrop").get<double>();
    if (j.contains("dropAtStep")) c.dropAtStep = j.at("dropAtStep").get<long long>();
    if (j.contains("maxSteps")) c.maxSteps = j.at("maxSteps").get<long long>();
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("batchSize")) c.batchSize = j.at("batchSize").get<int>();
    if (j.contains("disparitySource"))
        c.disparitySource = disparity_source_from_name(j.at("disparitySource").get<std::string>());
    if (j.contains("noiseSigma")) c.noiseSigma = j.at("noiseSigma").get<double>();
    if (j.contains("sources")) c.sources = j.at("sources").get<std::vector<int>>();

    if (c.dmax <= 0.0) throw std::invalid_argument("config: dmax must be positive");
    if (c.channels != 1 && c.channels != 3)
        throw std::invalid_argument("config: channels must be 1 or 3");
    if (c.patchSize < 4) throw std::invalid_argument("config: patchSize too small");
    if (c.stride < 1) throw std::invalid_argument("config: stride must be positive");
    if (c.batchSize < 1) throw std::invalid_argument("config: batchSize must be positive");
    if (c.maxSteps < 0) throw std::invalid_argument("config: maxSteps must be non-negative");
    if (!c.sources.empty() && c.sources.size() != 2)
        throw std::invalid_argument("config: sources must list exactly two views");
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config: " + path);
    json j;
    f >> j;
    return config_from_json(j);
}

json config_to_json(const PipelineConfig& c) {
    return json{{"dmax", c.dmax},
                {"kernel", kernel_name(c.kernel)},
                {"channels", c.channels},
                {"featureDim", c.featureDim},
                {"fwHidden", c.fwHidden},
                {"fbHidden", c.fbHidden},
                {"frChannels", c.frChannels},
                {"normalizeWeights", c.normalizeWeights},
                {"normalizeConfidence", c.normalizeConfidence},
                {"patchSize", c.patchSize},
                {"stride", c.stride},
                {"lrInitial", c.lrInitial},
                {"lrAfterDrop", c.lrAfterDrop},
                {"dropAtStep", c.dropAtStep},
                {"maxSteps", c.maxSteps},
                {"lambda", c.lambda},
                {"seed", c.seed},
                {"batchSize", c.batchSize},
                {"disparitySource", disparity_source_name(c.disparitySource)},
                {"noiseSigma", c.noiseSigma},
                {"sources", c.sources}};
}

ArchConfig make_arch(const PipelineConfig& cfg, int numViews) {
    if (numViews < 2) throw std::invalid_argument("make_arch: need at least two views");
    ArchConfig a;
    a.channels = cfg.channels;
    a.featureDim = cfg.featureDim;
    a.fwHidden = cfg.fwHidden;
    a.fbHidden = cfg.fbHidden;
    a.frChannels = cfg.frChannels;
    a.normalizeWeights = cfg.normalizeWeights;
    a.normalizeConfidence = cfg.normalizeConfidence;
    a.dMax = cfg.dmax;
    a.kernel = cfg.kernel;
    a.kValues = k_values_for(cfg.dmax, numViews);
    return a;
}

std::vector<int> resolve_sources(const PipelineConfig& cfg, int numViews) {
    std::vector<int> s = cfg.sources.empty() ? std::vector<int>{0, numViews - 1} : cfg.sources;
    if (s.size() != 2 || s[0] < 0 || s[1] >= numViews || s[0] >= s[1])
        throw std::invalid_argument("config: invalid source pair for this light field");
    return s;
}

}  // namespace lf
