#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "lf/config.hpp"
#include "lf/nn.hpp"
#include "lf/oracle.hpp"
#include "lf/threads.hpp"
#include "lf/train.hpp"

using namespace lf;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_cfg() {
    PipelineConfig cfg;
    cfg.dmax = 1.5;
    cfg.featureDim = 8;
    cfg.fwHidden = 16;
    cfg.fbHidden = 16;
    cfg.frChannels = 8;
    cfg.patchSize = 12;
    cfg.stride = 6;
    cfg.seed = 303;
    cfg.lambda = 0.1;
    return cfg;
}

SceneData small_scene(const PipelineConfig& cfg, std::uint64_t seed) {
    SceneOracle sc = gen_scene_random(seed, 3, 24, 24, 2, cfg.dmax);
    return prepare_scene(sc.renders, sc.gtDisparity, cfg, seed);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
    if (a.names() != b.names()) return false;
    for (const auto& n : a.names()) {
        const Tensor &ta = a.get(n), &tb = b.get(n);
        if (!ta.same_shape(tb)) return false;
        if (std::memcmp(ta.data(), tb.data(), ta.size() * sizeof(double)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("scene seeds are deterministic and spread out") {
    CHECK(scene_seed(100, 0) == scene_seed(100, 0));
    CHECK(scene_seed(100, 0) != scene_seed(100, 1));
    CHECK(scene_seed(100, 0) != scene_seed(101, 0));
    CHECK(scene_seed(0, 0) != 0);
}

TEST_CASE("scene preparation splits sources from novel views") {
    PipelineConfig cfg = small_cfg();
    SceneOracle sc = gen_scene_random(41, 5, 20, 20, 2, cfg.dmax);
    SceneData sd = prepare_scene(sc.renders, sc.gtDisparity, cfg, 41);

    CHECK(sd.inputs.sourceIndices == std::vector<int>{0, 4});
    CHECK(sd.novel == std::vector<int>{1, 2, 3});
    CHECK(sd.contexts.size() == 2);
    CHECK(sd.contexts[0].s == 0);
    CHECK(sd.contexts[1].s == 4);
    CHECK(sd.mergedDt.size() == 5);

    // gt mode hands the exact maps through
    for (int m = 0; m < 2; ++m) {
        const DisparityMap& got = sd.inputs.sourceDisparities[m];
        const DisparityMap& want = sc.gtDisparity[sd.inputs.sourceIndices[m]];
        REQUIRE(got.data.size() == want.data.size());
        CHECK(std::memcmp(got.data.data(), want.data.data(),
                          got.data.size() * sizeof(double)) == 0);
    }

    cfg.sources = {1, 3};
    SceneData sd2 = prepare_scene(sc.renders, sc.gtDisparity, cfg, 41);
    CHECK(sd2.novel == std::vector<int>{0, 2, 4});

    CHECK_THROWS(prepare_scene(sc.renders, {sc.gtDisparity[0]}, cfg, 41));
}

TEST_CASE("noisy disparities are deterministic, bounded and distinct per source") {
    PipelineConfig cfg = small_cfg();
    cfg.disparitySource = DisparitySource::gt_noise;
    cfg.noiseSigma = 0.5;
    SceneOracle sc = gen_scene_random(42, 3, 20, 20, 2, cfg.dmax);

    SceneData a = prepare_scene(sc.renders, sc.gtDisparity, cfg, 42);
    SceneData b = prepare_scene(sc.renders, sc.gtDisparity, cfg, 42);
    SceneData c = prepare_scene(sc.renders, sc.gtDisparity, cfg, 43);

    bool diffSeed = false, diffSources = false, diffGt = false;
    for (int m = 0; m < 2; ++m) {
        const auto& da = a.inputs.sourceDisparities[m].data;
        CHECK(da == b.inputs.sourceDisparities[m].data);
        diffSeed = diffSeed || da != c.inputs.sourceDisparities[m].data;
        diffGt = diffGt ||
                 da != sc.gtDisparity[a.inputs.sourceIndices[m]].data;
        for (double v : da) CHECK(std::abs(v) <= cfg.dmax);
    }
    diffSources =
        a.inputs.sourceDisparities[0].data != a.inputs.sourceDisparities[1].data;
    CHECK(diffSeed);
    CHECK(diffSources);
    CHECK(diffGt);
}

TEST_CASE("step loss reports line up with the tape total") {
    PipelineConfig cfg = small_cfg();
    SceneData sd = small_scene(cfg, 99);
    ArchConfig arch = make_arch(cfg, 3);
    ModelParams params = init_model(arch, cfg.seed, true);

    ad::Tape tape(false);
    ParamVars pv(tape, params, false);
    StepLossVars sl = build_step_loss(tape, pv, sd, 3, 5, cfg, arch);

    REQUIRE(sl.reports.size() == sd.novel.size());
    double reconSum = 0.0;
    for (const auto& r : sl.reports) {
        CHECK(r.lambda == cfg.lambda);
        CHECK(r.epiLoss == sl.reports[0].epiLoss);  // shared term
        CHECK(std::abs(r.total - (r.reconSum() + r.lambda * r.epiLoss)) <= 1e-12);
        CHECK(r.reconFinal > 0.0);
        reconSum += r.reconSum();
    }
    const double want =
        reconSum / double(sl.reports.size()) + cfg.lambda * sl.reports[0].epiLoss;
    CHECK(tape.value(sl.total)[0] == doctest::Approx(want).epsilon(1e-9));

    CHECK_THROWS(build_step_loss(tape, pv, sd, 20, 5, cfg, arch));  // crop past the edge
}

TEST_CASE("zero step training returns the untouched init") {
    PipelineConfig cfg = small_cfg();
    cfg.maxSteps = 0;
    std::vector<SceneData> scenes = {small_scene(cfg, 7)};
    fs::path dir = fs::temp_directory_path() / "lf_train_tests" / "zero";
    fs::create_directories(dir);

    TrainOutput out = train_model(scenes, cfg, dir.string());
    ModelParams fresh = init_model(out.arch, cfg.seed);
    CHECK(params_equal(out.params, fresh));

    auto [loaded, arch2] = load_checkpoint((dir / "checkpoint.bin").string());
    CHECK(params_equal(loaded, fresh));
    CHECK(arch2.kValues == out.arch.kValues);
}

TEST_CASE("training logs every step and is reproducible") {
    set_thread_count(1);
    PipelineConfig cfg = small_cfg();
    cfg.maxSteps = 6;
    std::vector<SceneData> scenes = {small_scene(cfg, 11), small_scene(cfg, 12)};

    fs::path base = fs::temp_directory_path() / "lf_train_tests";
    fs::path d1 = base / "run1", d2 = base / "run2";
    fs::create_directories(d1);
    fs::create_directories(d2);

    train_model(scenes, cfg, d1.string());
    train_model(scenes, cfg, d2.string());

    const std::string log1 = slurp(d1 / "loss.ndjson");
    CHECK(log1 == slurp(d2 / "loss.ndjson"));
    CHECK(slurp(d1 / "checkpoint.bin") == slurp(d2 / "checkpoint.bin"));

    std::istringstream lines(log1);
    std::string line;
    long long step = 0;
    while (std::getline(lines, line)) {
        json j = json::parse(line);
        ++step;
        CHECK(j["step"].get<long long>() == step);
        CHECK(j["lr"].get<double>() > 0.0);
        CHECK(j["total"].get<double>() > 0.0);
        CHECK(std::abs(j["total"].get<double>() -
                       (j["reconFinal"].get<double>() + j["reconBlend"].get<double>() +
                        j["reconPerSource"][0].get<double>() +
                        j["reconPerSource"][1].get<double>() +
                        cfg.lambda * j["epiLoss"].get<double>())) <= 1e-12);
    }
    CHECK(step == cfg.maxSteps);
    set_thread_count(0);
}

TEST_CASE("a short run reduces the loss") {
    set_thread_count(1);
    PipelineConfig cfg = small_cfg();
    cfg.maxSteps = 60;
    cfg.lrInitial = 1e-3;  // aggressive but fine for a smoke test
    cfg.lrAfterDrop = 1e-4;
    std::vector<SceneData> scenes = {small_scene(cfg, 21)};

    fs::path dir = fs::temp_directory_path() / "lf_train_tests" / "short";
    fs::create_directories(dir);
    train_model(scenes, cfg, dir.string());

    std::istringstream lines(slurp(dir / "loss.ndjson"));
    std::string line;
    std::vector<double> totals;
    while (std::getline(lines, line)) totals.push_back(json::parse(line)["total"].get<double>());
    REQUIRE(totals.size() == 60);
    double head = 0, tail = 0;
    for (int i = 0; i < 10; ++i) {
        head += totals[i] / 10.0;
        tail += totals[totals.size() - 1 - i] / 10.0;
    }
    CHECK(tail < head);
    set_thread_count(0);
}
