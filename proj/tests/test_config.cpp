#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "lf/config.hpp"

using namespace lf;
using json = nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("defaults survive an empty config") {
    PipelineConfig c = config_from_json(json::object());
    CHECK(c.dmax == 1.0);
    CHECK(c.kernel == Kernel::linear);
    CHECK(c.channels == 1);
    CHECK(c.featureDim == 16);
    CHECK(c.fwHidden == 64);
    CHECK(c.fbHidden == 64);
    CHECK(c.frChannels == 16);
    CHECK(c.normalizeWeights);
    CHECK(c.normalizeConfidence);
    CHECK(c.patchSize == 32);
    CHECK(c.stride == 16);
    CHECK(c.lrInitial == 1e-4);
    CHECK(c.lrAfterDrop == 1e-5);
    CHECK(c.dropAtStep == -1);
    CHECK(c.maxSteps == 1000);
    CHECK(c.lambda == 0.1);
    CHECK(c.seed == 1);
    CHECK(c.batchSize == 1);
    CHECK(c.disparitySource == DisparitySource::gt);
    CHECK(c.noiseSigma == 0.5);
    CHECK(c.sources.empty());
}

TEST_CASE("every key is parsed") {
    json j = {{"dmax", 3.0},
              {"kernel", "cubic"},
              {"channels", 3},
              {"featureDim", 8},
              {"fwHidden", 32},
              {"fbHidden", 24},
              {"frChannels", 12},
              {"normalizeWeights", false},
              {"normalizeConfidence", false},
              {"patchSize", 16},
              {"stride", 8},
              {"lrInitial", 2e-4},
              {"lrAfterDrop", 2e-5},
              {"dropAtStep", 500},
              {"maxSteps", 700},
              {"lambda", 0.25},
              {"seed", 99},
              {"batchSize", 2},
              {"disparitySource", "blockmatch"},
              {"noiseSigma", 0.75},
              {"sources", {0, 4}}};
    PipelineConfig c = config_from_json(j);
    CHECK(c.dmax == 3.0);
    CHECK(c.kernel == Kernel::cubic);
    CHECK(c.channels == 3);
    CHECK(c.featureDim == 8);
    CHECK(c.fwHidden == 32);
    CHECK(c.fbHidden == 24);
    CHECK(c.frChannels == 12);
    CHECK(!c.normalizeWeights);
    CHECK(!c.normalizeConfidence);
    CHECK(c.patchSize == 16);
    CHECK(c.stride == 8);
    CHECK(c.lrInitial == 2e-4);
    CHECK(c.lrAfterDrop == 2e-5);
    CHECK(c.dropAtStep == 500);
    CHECK(c.maxSteps == 700);
    CHECK(c.lambda == 0.25);
    CHECK(c.seed == 99);
    CHECK(c.batchSize == 2);
    CHECK(c.disparitySource == DisparitySource::blockmatch);
    CHECK(c.noiseSigma == 0.75);
    CHECK(c.sources == std::vector<int>{0, 4});
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK_THROWS_WITH_AS(config_from_json(json{{"dMax", 2.0}}),
                         doctest::Contains("dMax"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(config_from_json(json{{"patchsize", 8}}),
                         doctest::Contains("patchsize"), std::invalid_argument);
    CHECK_THROWS(config_from_json(json::array()));
}

TEST_CASE("invalid values are rejected") {
    CHECK_THROWS(config_from_json(json{{"dmax", 0.0}}));
    CHECK_THROWS(config_from_json(json{{"dmax", -1.0}}));
    CHECK_THROWS(config_from_json(json{{"channels", 2}}));
    CHECK_THROWS(config_from_json(json{{"patchSize", 3}}));
    CHECK_THROWS(config_from_json(json{{"stride", 0}}));
    CHECK_THROWS(config_from_json(json{{"batchSize", 0}}));
    CHECK_THROWS(config_from_json(json{{"maxSteps", -1}}));
    CHECK_THROWS(config_from_json(json{{"sources", {1}}}));
    CHECK_THROWS(config_from_json(json{{"sources", {0, 1, 2}}}));
    CHECK_THROWS(config_from_json(json{{"disparitySource", "exact"}}));
    CHECK_THROWS(config_from_json(json{{"kernel", "bilinear"}}));
}

TEST_CASE("late drop defaults to 80 percent of the run") {
    PipelineConfig c;
    c.maxSteps = 2000;
    c.dropAtStep = -1;
    CHECK(c.effectiveDropStep() == 1600);
    c.maxSteps = 999;
    CHECK(c.effectiveDropStep() == 799);
    c.dropAtStep = 10;
    CHECK(c.effectiveDropStep() == 10);
    c.dropAtStep = 0;
    CHECK(c.effectiveDropStep() == 0);
}

TEST_CASE("sources default to the outermost views") {
    PipelineConfig c;
    CHECK(resolve_sources(c, 5) == std::vector<int>{0, 4});
    CHECK(resolve_sources(c, 2) == std::vector<int>{0, 1});
    c.sources = {1, 3};
    CHECK(resolve_sources(c, 5) == std::vector<int>{1, 3});
    c.sources = {3, 1};
    CHECK_THROWS(resolve_sources(c, 5));
    c.sources = {0, 5};
    CHECK_THROWS(resolve_sources(c, 5));
    c.sources = {2, 2};
    CHECK_THROWS(resolve_sources(c, 5));
}

TEST_CASE("arch mirrors the config and covers every angular gap") {
    PipelineConfig c;
    c.dmax = 3.0;
    c.channels = 1;
    c.featureDim = 8;
    c.kernel = Kernel::cubic;
    ArchConfig a = make_arch(c, 5);
    CHECK(a.kValues == std::vector<int>{7, 13, 19, 25});
    CHECK(a.dMax == 3.0);
    CHECK(a.kernel == Kernel::cubic);
    CHECK(a.featureDim == 8);
    CHECK(a.embedDim() == 12);
    CHECK_THROWS(make_arch(c, 1));
}

TEST_CASE("json round trip preserves the config") {
    PipelineConfig c;
    c.dmax = 2.5;
    c.kernel = Kernel::cubic;
    c.patchSize = 24;
    c.dropAtStep = 123;
    c.seed = 12345;
    c.disparitySource = DisparitySource::gt_noise;
    c.noiseSigma = 0.33;
    c.sources = {0, 3};
    PipelineConfig d = config_from_json(config_to_json(c));
    CHECK(config_to_json(d) == config_to_json(c));

    fs::path dir = fs::temp_directory_path() / "lf_config_tests";
    fs::create_directories(dir);
    const std::string path = (dir / "cfg.json").string();
    std::ofstream(path) << config_to_json(c).dump(2);
    PipelineConfig e = load_config(path);
    CHECK(config_to_json(e) == config_to_json(c));
    CHECK_THROWS(load_config((dir / "missing.json").string()));
}
