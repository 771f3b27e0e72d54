#include "lf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "lf/rng.hpp"

namespace lf {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Sinusoid {
    double amp, fx, fy, phase;
};

struct LayerTexture {
    double dc = 0.5;
    std::vector<Sinusoid> waves;

    double eval(double xi, double y) const {
        double v = dc;
        for (const auto& w : waves)
            v += w.amp * std::sin(kTwoPi * (w.fx * xi + w.fy * y) + w.phase);
        return v;
    }
};

// DC levels alternate around mid-gray and the total sinusoid amplitude stays
// below half the DC gap, so adjacent layers never produce similar colors and
// occlusion errors stay well above the detection threshold used in tests.
LayerTexture draw_texture(Rng& rng, int layerIndex) {
    LayerTexture t;
    t.dc = (layerIndex % 2 == 0) ? 0.75 : 0.25;
    for (int j = 0; j < 3; ++j) {
        Sinusoid w;
        w.amp = rng.uniform(0.02, 0.05);
        w.fx = 1.0 / rng.uniform(16.0, 48.0);
        w.fy = 1.0 / rng.uniform(16.0, 48.0);
        if (rng.uniform() < 0.5) w.fy = -w.fy;
        w.phase = rng.uniform(0.0, kTwoPi);
        t.waves.push_back(w);
    }
    return t;
}

bool covers(const LayerSpec& layer, double xi) {
    if (layer.strips.empty()) return true;
    for (const auto& [a, b] : layer.strips)
        if (xi >= a && xi < b) return true;
    return false;
}

// Index of the front-most layer covering image position x of view u, or -1.
int visible_layer(const std::vector<LayerSpec>& layers, double x, int u) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const double xi = x - layers[l].disparity * u;
        if (covers(layers[l], xi)) return static_cast<int>(l);
    }
    return -1;
}

}  // namespace

SceneOracle gen_scene(std::uint64_t seed, int U, int H, int W,
                      std::vector<LayerSpec> specs, double dMax) {
    if (U < 2 || H < 1 || W < 2) throw std::invalid_argument("gen_scene: degenerate dimensions");
    if (specs.empty()) throw std::invalid_argument("gen_scene: no layers");
    if (specs.back().strips.size() != 0)
        throw std::invalid_argument("gen_scene: last layer must be a full background");
    for (std::size_t l = 0; l < specs.size(); ++l) {
        if (std::abs(specs[l].disparity) > dMax)
            throw std::invalid_argument("gen_scene: layer disparity exceeds dMax");
        if (l > 0 && specs[l].disparity >= specs[l - 1].disparity)
            throw std::invalid_argument("gen_scene: layer disparities must strictly decrease front to back");
    }

    SceneOracle sc;
    sc.U = U;
    sc.H = H;
    sc.W = W;
    sc.dMax = dMax;
    sc.layers = std::move(specs);

    Rng rng(seed);
    std::vector<LayerTexture> tex;
    for (std::size_t l = 0; l < sc.layers.size(); ++l) {
        Rng lr = rng.split();
        tex.push_back(draw_texture(lr, static_cast<int>(l)));
    }

    sc.renders.views.assign(U, Image(H, W, 1));
    sc.gtDisparity.assign(U, DisparityMap(H, W));
    sc.visLayer.assign(U, std::vector<unsigned char>(static_cast<std::size_t>(H) * W));

    for (int u = 0; u < U; ++u) {
        for (int y = 0; y < H; ++y) {
            for (int x = 0; x < W; ++x) {
                const int l = visible_layer(sc.layers, x, u);
                if (l < 0) throw std::logic_error("gen_scene: uncovered pixel");
                const double d = sc.layers[l].disparity;
                const double xi = x - d * u;
                sc.renders.views[u].at(x, y) = tex[l].eval(xi, y);
                sc.gtDisparity[u].at(x, y) = d;
                sc.visLayer[u][static_cast<std::size_t>(y) * W + x] =
                    static_cast<unsigned char>(l);
            }
        }
    }
    sc.renders.validate();

    // Warping view s onto view t reads I_s at x + d*(s-t) with two linear
    // taps. A read whose taps land on a different layer is occluded; a read
    // whose correspondent leaves the image goes into the separate
    // out-of-view mask.
    sc.occl.assign(static_cast<std::size_t>(U) * U,
                   std::vector<unsigned char>(static_cast<std::size_t>(H) * W, 0));
    sc.oov = sc.occl;
    for (int t = 0; t < U; ++t) {
        for (int s = 0; s < U; ++s) {
            if (s == t) continue;
            auto& mask = sc.occl[static_cast<std::size_t>(t) * U + s];
            auto& fov = sc.oov[static_cast<std::size_t>(t) * U + s];
            for (int y = 0; y < H; ++y) {
                for (int x = 0; x < W; ++x) {
                    const std::size_t p = static_cast<std::size_t>(y) * W + x;
                    const int l = sc.visLayer[t][p];
                    const double xs = x + sc.layers[l].disparity * (s - t);
                    if (xs < 0.0 || xs > W - 1.0) {
                        fov[p] = 1;
                        continue;
                    }
                    const int i0 = static_cast<int>(std::floor(xs));
                    const double f = xs - i0;
                    bool bad = sc.visLayer[s][static_cast<std::size_t>(y) * W + i0] != l;
                    if (f > 0.0 && !bad)
                        bad = sc.visLayer[s][static_cast<std::size_t>(y) * W +
                                             std::min(i0 + 1, W - 1)] != l;
                    mask[p] = bad ? 1 : 0;
                }
            }
        }
    }
    return sc;
}

SceneOracle gen_scene_random(std::uint64_t seed, int U, int H, int W,
                             int numLayers, double dMax) {
    if (numLayers < 1) throw std::invalid_argument("gen_scene_random: need at least one layer");
    Rng rng(seed);
    Rng geo = rng.split();

    // Disparities on a 0.5 grid, strictly decreasing front to back. Keeping
    // them on the grid makes linear interpolation weights exactly {0, 0.5}
    // and lets PFM (32-bit) round-trip them losslessly.
    std::vector<double> grid;
    for (double d = -dMax; d <= dMax + 1e-9; d += 0.5) grid.push_back(d);
    if (static_cast<int>(grid.size()) < numLayers)
        throw std::invalid_argument("gen_scene_random: dMax too small for the layer count");
    std::vector<int> idx(grid.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int l = 0; l < numLayers; ++l) {
        const int j = l + geo.uniform_int(static_cast<int>(idx.size()) - l);
        std::swap(idx[static_cast<std::size_t>(l)], idx[static_cast<std::size_t>(j)]);
    }
    std::vector<double> disps;
    for (int l = 0; l < numLayers; ++l) disps.push_back(grid[idx[static_cast<std::size_t>(l)]]);
    std::sort(disps.begin(), disps.end(), std::greater<>());

    std::vector<LayerSpec> specs;
    for (int l = 0; l < numLayers; ++l) {
        LayerSpec sp;
        sp.disparity = disps[l];
        if (l + 1 < numLayers) {
            const int strips = 1 + geo.uniform_int(2);
            for (int k = 0; k < strips; ++k) {
                for (int tries = 0; tries < 64; ++tries) {
                    const int width = 8 + geo.uniform_int(7);
                    const int lo = 4 + geo.uniform_int(std::max(1, W - 8 - width));
                    bool ok = true;
                    for (const auto& [a, b] : sp.strips)
                        if (lo < b + 6 && a < lo + width + 6) ok = false;
                    if (ok) {
                        sp.strips.emplace_back(lo, lo + width);
                        break;
                    }
                }
            }
        }
        specs.push_back(std::move(sp));
    }
    return gen_scene(seed * 0x9e3779b97f4a7c15ULL + 1, U, H, W, std::move(specs), dMax);
}

DisparityMap estimate_disparity_bm(const Image& is, const Image& isPrime,
                                   int s, int sPrime, const BlockMatchConfig& cfg) {
    if (s == sPrime) throw std::invalid_argument("estimate_disparity_bm: views coincide");
    if (!is.same_dims(isPrime)) throw std::invalid_argument("estimate_disparity_bm: dimension mismatch");
    if (cfg.window < 1 || cfg.window % 2 == 0)
        throw std::invalid_argument("estimate_disparity_bm: window must be odd");

    const int H = is.h, W = is.w, C = is.c;
    const int hw = cfg.window / 2;
    const int R = cfg.searchRange;
    DisparityMap out(H, W);

    auto cost = [&](int x, int y, int shift) {
        double acc = 0.0;
        for (int j = -hw; j <= hw; ++j) {
            const int yy = std::clamp(y + j, 0, H - 1);
            for (int i = -hw; i <= hw; ++i) {
                const int xa = std::clamp(x + i, 0, W - 1);
                const int xb = std::clamp(x + shift + i, 0, W - 1);
                for (int ch = 0; ch < C; ++ch)
                    acc += std::abs(is.at(xa, yy, ch) - isPrime.at(xb, yy, ch));
            }
        }
        return acc;
    };

#pragma omp parallel for schedule(static)
    for (int y = 0; y < H; ++y) {
        std::vector<double> costs(2 * R + 1);
        for (int x = 0; x < W; ++x) {
            for (int shift = -R; shift <= R; ++shift)
                costs[shift + R] = cost(x, y, shift);

            // Scan outward from zero; only a strictly lower cost replaces the
            // incumbent, so ties resolve to the smaller magnitude and to the
            // positive shift at equal magnitude.
            int best = 0;
            double bestCost = costs[R];
            for (int m = 1; m <= R; ++m) {
                for (int shift : {m, -m}) {
                    if (costs[shift + R] < bestCost) {
                        bestCost = costs[shift + R];
                        best = shift;
                    }
                }
            }

            double offset = 0.0;
            if (best > -R && best < R) {
                const double cm = costs[best - 1 + R];
                const double c0 = costs[best + R];
                const double cp = costs[best + 1 + R];
                const double denom = cm - 2.0 * c0 + cp;
                if (denom > 0.0)
                    offset = std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
            }
            out.at(x, y) = (best + offset) / static_cast<double>(sPrime - s);
        }
    }
    return out;
}

DisparityMap perturb_disparity(const DisparityMap& d, double sigma,
                               std::uint64_t seed, double dMax) {
    if (sigma == 0.0) return d;
    Rng rng(seed);
    DisparityMap out(d.h, d.w);
    for (int y = 0; y < d.h; ++y)
        for (int x = 0; x < d.w; ++x)
            out.at(x, y) = std::clamp(d.at(x, y) + rng.normal(0.0, sigma), -dMax, dMax);
    return out;
}

}  // namespace lf
