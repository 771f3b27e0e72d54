#include "lf/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lf/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint layout assumes a little-endian host");

namespace lf {

using json = nlohmann::json;

bool ArchConfig::hasK(int k) const {
    return std::find(kValues.begin(), kValues.end(), k) != kValues.end();
}

int neighborhood_size(double dMax, int dt) {
    return 2 * static_cast<int>(std::ceil(dMax * std::abs(dt))) + 1;
}

std::vector<int> k_values_for(double dMax, int U) {
    std::vector<int> ks;
    for (int dt = 1; dt < U; ++dt) {
        const int k = neighborhood_size(dMax, dt);
        if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
    }
    std::sort(ks.begin(), ks.end());
    return ks;
}

void ModelParams::add(std::string name, Tensor t) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    index_[name] = names_.size();
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(t));
}

bool ModelParams::has(const std::string& name) const { return index_.count(name) != 0; }

Tensor& ModelParams::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return tensors_[it->second];
}

const Tensor& ModelParams::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
    return tensors_[it->second];
}

std::size_t ModelParams::totalElements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

namespace {

Tensor he_conv(Rng& rng, int co, int ci) {
    Tensor t({co, ci, 3, 3});
    const double sigma = std::sqrt(2.0 / (ci * 9));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, sigma);
    return t;
}

Tensor he_affine(Rng& rng, int in, int out) {
    Tensor t({in, out});
    const double sigma = std::sqrt(2.0 / in);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, sigma);
    return t;
}

}  // namespace

ModelParams init_model(const ArchConfig& arch, std::uint64_t seed, bool randomizeResidual) {
    if (arch.kValues.empty()) throw std::invalid_argument("init_model: kValues is empty");
    Rng rng(seed);
    ModelParams p;
    const int F = arch.featureDim, C = arch.channels, E = arch.embedDim();

    auto conv = [&](const std::string& name, int co, int ci, bool zero) {
        if (zero && !randomizeResidual) {
            p.add(name + ".w", Tensor({co, ci, 3, 3}));
            p.add(name + ".b", Tensor({co}));
        } else {
            p.add(name + ".w", he_conv(rng, co, ci));
            p.add(name + ".b", Tensor({co}));
        }
    };
    auto dense = [&](const std::string& name, int in, int out) {
        p.add(name + ".w", he_affine(rng, in, out));
        p.add(name + ".b", Tensor({out}));
    };

    conv("fc.in", F, arch.stackChannels(), false);
    for (int i = 0; i < arch.numResBlocks; ++i) {
        conv("fc.rb" + std::to_string(i) + ".c1", F, F, false);
        conv("fc.rb" + std::to_string(i) + ".c2", F, F, true);
    }

    dense("fw.l0", E, arch.fwHidden);
    dense("fw.l1", arch.fwHidden, arch.fwHidden);
    dense("fw.l2", arch.fwHidden, arch.fwHidden);
    dense("fw.out", arch.fwHidden, 1);

    for (int k : arch.kValues) dense("fb.in.k" + std::to_string(k), k * E, arch.fbHidden);
    dense("fb.l1", arch.fbHidden, arch.fbHidden);
    dense("fb.out", arch.fbHidden, 1);

    const int R = arch.frChannels;
    conv("fr.in", R, C * (1 + ArchConfig::numSources), false);
    for (int i = 0; i < arch.numResBlocks; ++i) {
        conv("fr.rb" + std::to_string(i) + ".c1", R, R, false);
        conv("fr.rb" + std::to_string(i) + ".c2", R, R, true);
    }
    conv("fr.out", C, R, true);
    return p;
}

namespace {

json arch_to_json(const ArchConfig& a) {
    return json{{"channels", a.channels},
                {"featureDim", a.featureDim},
                {"fwHidden", a.fwHidden},
                {"fbHidden", a.fbHidden},
                {"frChannels", a.frChannels},
                {"numResBlocks", a.numResBlocks},
                {"kValues", a.kValues},
                {"normalizeWeights", a.normalizeWeights},
                {"normalizeConfidence", a.normalizeConfidence},
                {"dMax", a.dMax},
                {"kernel", kernel_name(a.kernel)}};
}

ArchConfig arch_from_json(const json& j) {
    ArchConfig a;
    a.channels = j.at("channels").get<int>();
    a.featureDim = j.at("featureDim").get<int>();
    a.fwHidden = j.at("fwHidden").get<int>();
    a.fbHidden = j.at("fbHidden").get<int>();
    a.frChannels = j.at("frChannels").get<int>();
    a.numResBlocks = j.at("numResBlocks").get<int>();
    a.kValues = j.at("kValues").get<std::vector<int>>();
    a.normalizeWeights = j.at("normalizeWeights").get<bool>();
    a.normalizeConfidence = j.at("normalizeConfidence").get<bool>();
    a.dMax = j.at("dMax").get<double>();
    a.kernel = kernel_from_name(j.at("kernel").get<std::string>());
    return a;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const ArchConfig& arch) {
    json tensors = json::array();
    std::uint64_t offset = 0;
    for (const auto& name : params.names()) {
        const Tensor& t = params.get(name);
        tensors.push_back({{"name", name},
                           {"shape", t.shape()},
                           {"dtype", "f64"},
                           {"offset", offset}});
        offset += t.size() * sizeof(double);
    }
    json header{{"version", 1}, {"arch", arch_to_json(arch)}, {"tensors", tensors}};
    const std::string hs = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    const std::uint32_t len = static_cast<std::uint32_t>(hs.size());
    f.write(reinterpret_cast<const char*>(&len), 4);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& name : params.names()) {
        const Tensor& t = params.get(name);
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

std::pair<ModelParams, ArchConfig> load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
    std::uint32_t len = 0;
    f.read(reinterpret_cast<char*>(&len), 4);
    if (!f) throw std::runtime_error("truncated checkpoint header: " + path);
    std::string hs(len, '\0');
    f.read(hs.data(), len);
    if (!f) throw std::runtime_error("truncated checkpoint header: " + path);

    json header = json::parse(hs);
    if (!header.contains("version") || header.at("version").get<int>() != 1)
        throw std::runtime_error("unsupported checkpoint version in " + path);
    ArchConfig arch = arch_from_json(header.at("arch"));

    const std::streampos dataStart = f.tellg();
    ModelParams params;
    for (const auto& e : header.at("tensors")) {
        if (e.at("dtype").get<std::string>() != "f64")
            throw std::runtime_error("unsupported tensor dtype in " + path);
        const auto shape = e.at("shape").get<std::vector<int>>();
        Tensor t(shape);
        f.seekg(dataStart + static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!f) throw std::runtime_error("truncated tensor data in " + path);
        params.add(e.at("name").get<std::string>(), std::move(t));
    }
    return {std::move(params), std::move(arch)};
}

AdamState::AdamState(const ModelParams& params, AdamConfig cfg) : cfg_(cfg) {
    for (const auto& name : params.names()) {
        m_.emplace_back(params.get(name).shape(), 0.0);
        v_.emplace_back(params.get(name).shape(), 0.0);
    }
}

void AdamState::step(ModelParams& params, const std::vector<const Tensor*>& grads, double lr) {
    if (grads.size() != m_.size())
        throw std::invalid_argument("adam: gradient list does not match parameter count");
    ++t_;
    b1pow_ *= cfg_.beta1;
    b2pow_ *= cfg_.beta2;
    const double c1 = 1.0 - b1pow_, c2 = 1.0 - b2pow_;
    for (std::size_t pi = 0; pi < m_.size(); ++pi) {
        Tensor& p = params.get(params.names()[pi]);
        Tensor &m = m_[pi], &v = v_[pi];
        const Tensor* g = grads[pi];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g ? (*g)[i] : 0.0;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
            p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
        }
    }
}

ad::Var ParamVars::operator[](const std::string& name) {
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    ad::Var v = tape_->leaf(params_->get(name), trainable_);
    vars_.emplace(name, v);
    return v;
}

const ad::Var* ParamVars::find(const std::string& name) const {
    auto it = vars_.find(name);
    return it == vars_.end() ? nullptr : &it->second;
}

namespace {

ad::Var res_block(ad::Tape& t, ParamVars& p, ad::Var x, const std::string& prefix) {
    ad::Var h = t.conv3x3(x, p[prefix + ".c1.w"], p[prefix + ".c1.b"], true);
    ad::Var o = t.conv3x3(h, p[prefix + ".c2.w"], p[prefix + ".c2.b"]);
    return t.add(x, o);
}

}  // namespace

ad::Var content_net(ad::Tape& t, ParamVars& p, const Tensor& stack, const ArchConfig& arch) {
    ad::Var x = t.leaf(stack);
    ad::Var h = t.conv3x3(x, p["fc.in.w"], p["fc.in.b"], true);
    for (int i = 0; i < arch.numResBlocks; ++i)
        h = res_block(t, p, h, "fc.rb" + std::to_string(i));
    return h;
}

ad::Var weight_mlp(ad::Tape& t, ParamVars& p, ad::Var embed) {
    ad::Var h = t.affine(embed, p["fw.l0.w"], p["fw.l0.b"], true);
    h = t.affine(h, p["fw.l1.w"], p["fw.l1.b"], true);
    h = t.affine(h, p["fw.l2.w"], p["fw.l2.b"], true);
    return t.affine(h, p["fw.out.w"], p["fw.out.b"]);
}

ad::Var blend_mlp(ad::Tape& t, ParamVars& p, ad::Var embed, int k) {
    const std::string in = "fb.in.k" + std::to_string(k);
    ad::Var h = t.affine(embed, p[in + ".w"], p[in + ".b"], true);
    h = t.affine(h, p["fb.l1.w"], p["fb.l1.b"], true);
    return t.affine(h, p["fb.out.w"], p["fb.out.b"]);
}

ad::Var refine_net(ad::Tape& t, ParamVars& p, ad::Var blended,
                   const std::vector<Tensor>& srcPatches, const ArchConfig& arch) {
    std::vector<ad::Var> parts{blended};
    for (const auto& s : srcPatches) parts.push_back(t.leaf(s));
    ad::Var x = t.concat(parts, 0);
    ad::Var h = t.conv3x3(x, p["fr.in.w"], p["fr.in.b"], true);
    for (int i = 0; i < arch.numResBlocks; ++i)
        h = res_block(t, p, h, "fr.rb" + std::to_string(i));
    ad::Var o = t.conv3x3(h, p["fr.out.w"], p["fr.out.b"]);
    return t.add(blended, o);
}

}  // namespace lf
