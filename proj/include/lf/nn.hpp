#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lf/tape.hpp"
#include "lf/tensor.hpp"
#include "lf/warp.hpp"

namespace lf {

// Widths and switches that fix every parameter shape. Stored inside
// checkpoints so a model can be reloaded without the original config.
struct ArchConfig {
    int channels = 1;     // image channels
    int featureDim = 16;  // content feature channels
    int fwHidden = 64;    // weight MLP width
    int fbHidden = 64;    // confidence MLP width
    int frChannels = 16;  // refinement conv width
    int numResBlocks = 4;
    std::vector<int> kValues;  // neighborhood sizes, ascending, one per angular gap
    bool normalizeWeights = true;
    bool normalizeConfidence = true;
    double dMax = 1.0;
    Kernel kernel = Kernel::linear;

    static constexpr int numSources = 2;

    int embedDim() const { return 4 + featureDim; }
    int stackChannels() const { return 2 * channels + 1; }
    bool hasK(int k) const;
};

// Neighborhood size for an angular gap of dt views.
int neighborhood_size(double dMax, int dt);
// All sizes that can occur in a light field of U views: gaps 1 .. U-1.
std::vector<int> k_values_for(double dMax, int U);

// Named parameter tensors in fixed creation order. The order defines both
// the RNG draw sequence at init and the checkpoint layout.
class ModelParams {
public:
    void add(std::string name, Tensor t);
    bool has(const std::string& name) const;
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;
    const std::vector<std::string>& names() const { return names_; }
    std::size_t totalElements() const;

private:
    std::vector<std::string> names_;
    std::vector<Tensor> tensors_;
    std::unordered_map<std::string, std::size_t> index_;
};

// He-normal weights, zero biases. The second conv of every residual block
// and the refinement output layer start at zero so the whole refinement and
// feature paths are exact identities / zeros at init; randomizeResidual
// draws those too (gradient checking needs them off their saddle).
ModelParams init_model(const ArchConfig& arch, std::uint64_t seed,
                       bool randomizeResidual = false);

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ArchConfig& arch);
std::pair<ModelParams, ArchConfig> load_checkpoint(const std::string& path);

struct LrSchedule {
    double lrInitial = 1e-4;
    double lrAfterDrop = 1e-5;
    long long dropAtStep = 0;  // steps numbered from 1; step > dropAtStep uses the low rate

    double at(long long step) const { return step > dropAtStep ? lrAfterDrop : lrInitial; }
};

struct AdamConfig {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

class AdamState {
public:
    explicit AdamState(const ModelParams& params, AdamConfig cfg = {});

    // grads aligned with params.names(); null entries are zero gradients.
    void step(ModelParams& params, const std::vector<const Tensor*>& grads, double lr);
    long long steps() const { return t_; }

private:
    AdamConfig cfg_;
    long long t_ = 0;
    double b1pow_ = 1.0, b2pow_ = 1.0;
    std::vector<Tensor> m_, v_;
};

// Lazily registers parameters as leaves of one tape. Keeps the name->Var
// mapping so gradients can be read back after backward().
class ParamVars {
public:
    ParamVars(ad::Tape& tape, const ModelParams& params, bool trainable)
        : tape_(&tape), params_(&params), trainable_(trainable) {}

    ad::Var operator[](const std::string& name);
    const ad::Var* find(const std::string& name) const;

private:
    ad::Tape* tape_;
    const ModelParams* params_;
    bool trainable_;
    std::unordered_map<std::string, ad::Var> vars_;
};

// (2C+1,H,W) source stack -> (F,H,W) content features.
ad::Var content_net(ad::Tape& t, ParamVars& p, const Tensor& stack, const ArchConfig& arch);

// (R, 4+F) neighbor embeddings -> (R, 1) raw interpolation weights.
ad::Var weight_mlp(ad::Tape& t, ParamVars& p, ad::Var embed);

// (N, K*(4+F)) per-pixel concatenated embeddings -> (N, 1) confidence logit.
// Uses the input layer trained for this K.
ad::Var blend_mlp(ad::Tape& t, ParamVars& p, ad::Var embed, int k);

// (C,h,w) blended patch + M constant source patches -> (C,h,w) refined patch.
ad::Var refine_net(ad::Tape& t, ParamVars& p, ad::Var blended,
                   const std::vector<Tensor>& srcPatches, const ArchConfig& arch);

}  // namespace lf
