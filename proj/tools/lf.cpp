#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lf/config.hpp"
#include "lf/gradcheck.hpp"
#include "lf/image.hpp"
#include "lf/io.hpp"
#include "lf/metrics.hpp"
#include "lf/nn.hpp"
#include "lf/oracle.hpp"
#include "lf/threads.hpp"
#include "lf/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(const char* f, int a, int b = -1) {
    char buf[64];
    if (b >= 0)
        std::snprintf(buf, sizeof buf, f, a, b);
    else
        std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        std::string tok = s.substr(pos, comma - pos);
        if (!tok.empty()) out.push_back(std::stoi(tok));
        pos = comma + 1;
    }
    return out;
}

struct GlobalOpts {
    std::uint64_t seed = 0;
    bool seedSet = false;
    std::string config;
    int threads = 0;
    std::string out;
};

lf::PipelineConfig resolve_config(const GlobalOpts& g) {
    lf::PipelineConfig cfg;
    if (!g.config.empty()) cfg = lf::load_config(g.config);
    if (g.seedSet) cfg.seed = g.seed;
    return cfg;
}

int cmd_synth(const GlobalOpts& g, int scenes, int views, int height, int width, int layers,
              double dmax, bool png) {
    if (g.out.empty()) throw std::runtime_error("synth: --out directory required");
    const std::uint64_t base = g.seedSet ? g.seed : 1;
    for (int i = 0; i < scenes; ++i) {
        lf::SceneOracle sc =
            lf::gen_scene_random(lf::scene_seed(base, static_cast<std::size_t>(i)), views, height,
                                 width, layers, dmax);
        const std::string dir = g.out + "/" + fmt("scene_%03d", i);
        lf::LfContainer c;
        c.lf = sc.renders;
        c.disparities = sc.gtDisparity;
        c.hasDisparity.assign(static_cast<std::size_t>(views), true);
        c.dmax = dmax;
        lf::save_container(c, dir, png);
        if (png) {
            for (int t = 0; t < views; ++t)
                for (int s = 0; s < views; ++s) {
                    if (s == t) continue;
                    const auto& m = sc.occlusion(t, s);
                    const auto& fov = sc.out_of_fov(t, s);
                    lf::Image img(height, width, 1);
                    // white = occluded, gray = correspondent leaves the image
                    for (std::size_t k = 0; k < m.size(); ++k)
                        img.data[k] = m[k] ? 1.0 : (fov[k] ? 0.5 : 0.0);
                    lf::write_png16(dir + "/" + fmt("occlusion_%d_%d.png", t, s), img);
                }
        }
        std::printf("%s: U=%d %dx%d layers=%d dmax=%g\n", dir.c_str(), views, height, width,
                    static_cast<int>(sc.layers.size()), dmax);
    }
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::vector<std::string>& dataDirs, long long ckptEvery) {
    if (g.out.empty()) throw std::runtime_error("train: --out directory required");
    if (dataDirs.empty()) throw std::runtime_error("train: at least one --data directory required");
    lf::PipelineConfig cfg = resolve_config(g);

    std::vector<lf::SceneData> scenes;
    for (std::size_t i = 0; i < dataDirs.size(); ++i) {
        lf::LfContainer c = lf::load_container(dataDirs[i]);
        for (int u = 0; u < c.lf.U(); ++u)
            if (!c.hasDisparity[static_cast<std::size_t>(u)])
                throw std::runtime_error("train: " + dataDirs[i] + " lacks disparity for view " +
                                         std::to_string(u));
        if (c.dmax && *c.dmax > cfg.dmax + 1e-12)
            throw std::runtime_error("train: " + dataDirs[i] + " disparity range " +
                                     std::to_string(*c.dmax) + " exceeds configured dmax " +
                                     std::to_string(cfg.dmax));
        scenes.push_back(lf::prepare_scene(c.lf, c.disparities, cfg, lf::scene_seed(cfg.seed, i)));
    }

    fs::create_directories(g.out);
    std::ofstream(g.out + "/config.json") << lf::config_to_json(cfg).dump(2) << "\n";
    lf::TrainOutput to = lf::train_model(scenes, cfg, g.out, ckptEvery);
    std::printf("trained %lld steps on %zu scene(s) -> %s/checkpoint.bin\n", to.steps,
                scenes.size(), g.out.c_str());
    return 0;
}

int cmd_reconstruct(const GlobalOpts& g, const std::string& input, const std::string& ckpt,
                    const std::string& mode, bool noRefine, const std::string& targetsArg,
                    bool intermediates, bool png) {
    if (g.out.empty()) throw std::runtime_error("reconstruct: --out directory required");
    if (mode != "dynamic" && mode != "baseline")
        throw std::runtime_error("reconstruct: --mode must be dynamic or baseline");
    const bool baseline = mode == "baseline";

    auto [params, arch] = lf::load_checkpoint(ckpt);
    lf::PipelineConfig cfg = resolve_config(g);
    cfg.dmax = arch.dMax;
    cfg.kernel = arch.kernel;
    cfg.channels = arch.channels;

    lf::LfContainer c = lf::load_container(input);
    if (c.lf.C() != arch.channels)
        throw std::runtime_error("reconstruct: container has " + std::to_string(c.lf.C()) +
                                 " channels, model expects " + std::to_string(arch.channels));
    if (c.dmax && *c.dmax > arch.dMax + 1e-12)
        throw std::runtime_error("reconstruct: container disparity range " +
                                 std::to_string(*c.dmax) + " exceeds model dmax " +
                                 std::to_string(arch.dMax));

    const int U = c.lf.U();
    std::vector<lf::DisparityMap> disp = c.disparities;
    const std::vector<int> sources = lf::resolve_sources(cfg, U);
    for (int s : sources)
        if (!c.hasDisparity[static_cast<std::size_t>(s)] &&
            cfg.disparitySource != lf::DisparitySource::blockmatch)
            throw std::runtime_error(
                "reconstruct: no stored disparity for source view " + std::to_string(s) +
                "; set disparitySource to blockmatch");
    for (int u = 0; u < U; ++u)
        if (disp[static_cast<std::size_t>(u)].data.empty())
            disp[static_cast<std::size_t>(u)] = lf::DisparityMap(c.lf.H(), c.lf.W());

    lf::SceneData scene = lf::prepare_scene(c.lf, disp, cfg, lf::scene_seed(cfg.seed, 0));

    std::vector<int> targets =
        targetsArg.empty() ? scene.novel : parse_int_list(targetsArg);
    for (int t : targets) {
        if (t < 0 || t >= U)
            throw std::runtime_error("reconstruct: target " + std::to_string(t) + " out of range");
        for (int s : sources)
            if (s == t)
                throw std::runtime_error("reconstruct: target " + std::to_string(t) +
                                         " is a source view");
    }

    fs::create_directories(g.out);
    std::vector<lf::ViewMetric> vms;
    for (int t : targets) {
        auto t0 = std::chrono::steady_clock::now();
        lf::ViewSynthesis parts;
        lf::Image img = lf::reconstruct_view(scene, t, params, arch, cfg, baseline, !noRefine,
                                             intermediates ? &parts : nullptr);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        lf::write_pfm(g.out + "/" + fmt("view_%03d.pfm", t), img);
        if (png) lf::write_png16(g.out + "/" + fmt("view_%03d.png", t), img);
        if (intermediates) {
            lf::write_pfm(g.out + "/" + fmt("blended_%03d.pfm", t), parts.blended);
            for (std::size_t m = 0; m < parts.perSource.size(); ++m) {
                lf::write_pfm(g.out + "/" + fmt("synth_%03d_src%d.pfm", t, static_cast<int>(m)),
                              parts.perSource[m]);
                lf::write_pfm(g.out + "/" + fmt("conf_%03d_src%d.pfm", t, static_cast<int>(m)),
                              parts.confidence[m]);
            }
        }
        lf::ViewMetric vm;
        vm.u = t;
        vm.psnr = lf::psnr(img, c.lf.views[static_cast<std::size_t>(t)]);
        vm.ssim = lf::ssim(img, c.lf.views[static_cast<std::size_t>(t)]);
        vm.seconds = secs;
        vms.push_back(vm);
        std::printf("view %d: psnr %.3f dB ssim %.4f (%.2fs)\n", t, vm.psnr, vm.ssim, secs);
    }
    lf::MetricReport rep = lf::make_metric_report(mode, std::move(vms));
    std::ofstream(g.out + "/metrics.json") << lf::metric_report_to_json(rep).dump(2) << "\n";
    std::printf("%s avg: psnr %.3f dB ssim %.4f -> %s/metrics.json\n", mode.c_str(), rep.avgPsnr,
                rep.avgSsim, g.out.c_str());
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& gtDir, const std::string& reconDir,
             std::string mode) {
    lf::LfContainer c = lf::load_container(gtDir);
    if (mode.empty()) {
        mode = "eval";
        std::ifstream mj(reconDir + "/metrics.json");
        if (mj) {
            json j = json::parse(mj, nullptr, false);
            if (!j.is_discarded() && j.contains("mode")) mode = j["mode"].get<std::string>();
        }
    }
    std::vector<lf::ViewMetric> vms;
    for (int u = 0; u < c.lf.U(); ++u) {
        const std::string path = reconDir + "/" + fmt("view_%03d.pfm", u);
        if (!fs::exists(path)) continue;
        lf::Image img = lf::read_pfm_image(path);
        lf::ViewMetric vm;
        vm.u = u;
        vm.psnr = lf::psnr(img, c.lf.views[static_cast<std::size_t>(u)]);
        vm.ssim = lf::ssim(img, c.lf.views[static_cast<std::size_t>(u)]);
        vms.push_back(vm);
    }
    if (vms.empty()) throw std::runtime_error("eval: no view_NNN.pfm files in " + reconDir);
    lf::MetricReport rep = lf::make_metric_report(mode, std::move(vms));
    const std::string text = lf::metric_report_to_json(rep).dump(2);
    if (g.out.empty()) {
        std::printf("%s\n", text.c_str());
    } else {
        std::string path = g.out;
        if (path.size() < 5 || path.substr(path.size() - 5) != ".json") {
            fs::create_directories(path);
            path += "/report.json";
        }
        std::ofstream(path) << text << "\n";
        std::printf("avg psnr %.3f dB ssim %.4f -> %s\n", rep.avgPsnr, rep.avgSsim, path.c_str());
    }
    return 0;
}

int cmd_gradcheck(bool quick, const std::string& only) {
    std::vector<lf::CheckSpec> specs = lf::op_checks();
    if (!quick) specs.push_back(lf::composed_check());
    std::printf("%-22s %12s %9s %8s %9s  %s\n", "check", "max rel", "tol", "evals", "time",
                "status");
    bool ok = true;
    for (const auto& spec : specs) {
        if (!only.empty() && spec.name != only) continue;
        lf::CheckResult r = lf::run_check(spec);
        ok = ok && r.pass;
        std::printf("%-22s %12.3e %9.0e %8zu %8.2fs  %s\n", r.name.c_str(), r.maxRel, r.tol,
                    r.evals, r.seconds, r.pass ? "pass" : "FAIL");
        if (!r.pass)
            std::printf("  worst: tensor %zu elem %zu analytic %.9e fd %.9e (%zu elements over)\n",
                        r.worstTensor, r.worstElem, r.worstAnalytic, r.worstFd, r.failCount);
    }
    std::printf("%s\n", ok ? "all gradient checks passed" : "gradient checks FAILED");
    return ok ? 0 : 1;
}

int cmd_epi(const GlobalOpts& g, const std::string& input, int row) {
    if (g.out.empty()) throw std::runtime_error("epi: --out file required");
    lf::LfContainer c = lf::load_container(input);
    const int y = row < 0 ? c.lf.H() / 2 : row;
    if (y >= c.lf.H()) throw std::runtime_error("epi: row out of range");
    std::string path = g.out;
    if (path.size() < 4 || path.substr(path.size() - 4) != ".png") {
        fs::create_directories(path);
        path += "/" + fmt("epi_row%03d.png", y);
    }
    lf::export_epi(c.lf, y, path);
    std::printf("EPI of row %d -> %s\n", y, path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse light field view synthesis"};
    app.require_subcommand(1);

    GlobalOpts g;
    auto* seedOpt = app.add_option("--seed", g.seed, "base RNG seed (overrides config)");
    app.add_option("--config", g.config, "pipeline config JSON file");
    app.add_option("--threads", g.threads, "worker threads (0 = library default)");
    app.add_option("--out", g.out, "output directory (file for eval/epi)");

    auto* synth = app.add_subcommand("synth", "generate oracle scenes with exact ground truth");
    synth->fallthrough();
    int scenes = 1, views = 5, height = 64, width = 64, layers = 2;
    double dmax = 3.0;
    bool png = false;
    synth->add_option("--scenes", scenes, "number of scenes");
    synth->add_option("--views", views, "views per scene");
    synth->add_option("--height", height, "view height");
    synth->add_option("--width", width, "view width");
    synth->add_option("--layers", layers, "depth layers per scene");
    synth->add_option("--dmax", dmax, "disparity range in px per angular step");
    synth->add_flag("--png", png, "also write PNG previews and occlusion masks");

    auto* train = app.add_subcommand("train", "train the interpolation model");
    train->fallthrough();
    std::vector<std::string> dataDirs;
    long long ckptEvery = 0;
    train->add_option("--data", dataDirs, "scene container directory (repeatable)");
    train->add_option("--ckpt-every", ckptEvery, "also checkpoint every N steps");

    auto* rec = app.add_subcommand("reconstruct", "synthesize novel views from a checkpoint");
    rec->fallthrough();
    std::string input, ckpt, mode = "dynamic", targets;
    bool noRefine = false, intermediates = false, recPng = false;
    rec->add_option("--input", input, "scene container directory")->required();
    rec->add_option("--ckpt", ckpt, "checkpoint file")->required();
    rec->add_option("--mode", mode, "dynamic | baseline");
    rec->add_flag("--no-refine", noRefine, "skip patch refinement");
    rec->add_option("--targets", targets, "comma-separated view indices (default: all novel)");
    rec->add_flag("--intermediates", intermediates, "write per-source views and confidence maps");
    rec->add_flag("--png", recPng, "also write PNG previews");

    auto* eval = app.add_subcommand("eval", "score reconstructed views against ground truth");
    eval->fallthrough();
    std::string gtDir, reconDir, evalMode;
    eval->add_option("--gt", gtDir, "ground-truth container directory")->required();
    eval->add_option("--recon", reconDir, "directory with view_NNN.pfm files")->required();
    eval->add_option("--mode", evalMode, "mode label for the report");

    auto* gc = app.add_subcommand("gradcheck", "verify analytic gradients by finite differences");
    gc->fallthrough();
    bool quick = false;
    std::string only;
    gc->add_flag("--quick", quick, "only per-op checks, skip the composed pipeline");
    gc->add_option("--only", only, "run a single named check");

    auto* epi = app.add_subcommand("epi", "export an epipolar-plane image");
    epi->fallthrough();
    std::string epiInput;
    int row = -1;
    epi->add_option("--input", epiInput, "scene container directory")->required();
    epi->add_option("--row", row, "image row (default: middle)");

    CLI11_PARSE(app, argc, argv);
    g.seedSet = seedOpt->count() > 0;
    if (g.threads > 0) lf::set_thread_count(g.threads);

    try {
        if (app.got_subcommand(synth))
            return cmd_synth(g, scenes, views, height, width, layers, dmax, png);
        if (app.got_subcommand(train)) return cmd_train(g, dataDirs, ckptEvery);
        if (app.got_subcommand(rec))
            return cmd_reconstruct(g, input, ckpt, mode, noRefine, targets, intermediates, recPng);
        if (app.got_subcommand(eval)) return cmd_eval(g, gtDir, reconDir, evalMode);
        if (app.got_subcommand(gc)) return cmd_gradcheck(quick, only);
        if (app.got_subcommand(epi)) return cmd_epi(g, epiInput, row);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
