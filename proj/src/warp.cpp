#include "lf/warp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lf {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline double keys(double s) {
    constexpr double a = -0.5;
    s = std::fabs(s);
    if (s <= 1.0) return (a + 2.0) * s * s * s - (a + 3.0) * s * s + 1.0;
    if (s < 2.0) return a * s * s * s - 5.0 * a * s * s + 8.0 * a * s - 4.0 * a;
    return 0.0;
}

}  // namespace

const char* kernel_name(Kernel k) { return k == Kernel::cubic ? "cubic" : "linear"; }

Kernel kernel_from_name(const std::string& name) {
    if (name == "linear") return Kernel::linear;
    if (name == "cubic") return Kernel::cubic;
    throw std::invalid_argument("unknown interpolation kernel: " + name);
}

double sample_1d(const Image& img, double x, int y, Kernel kernel, int ch) {
    if (!std::isfinite(x)) throw std::invalid_argument("sample_1d: non-finite x");
    if (y < 0 || y >= img.h) throw std::out_of_range("sample_1d: row out of range");
    const int i0 = static_cast<int>(std::floor(x));
    const double f = x - i0;
    if (kernel == Kernel::linear) {
        const double a = img.at(clampi(i0, 0, img.w - 1), y, ch);
        const double b = img.at(clampi(i0 + 1, 0, img.w - 1), y, ch);
        return (1.0 - f) * a + f * b;
    }
    double acc = 0.0;
    for (int k = -1; k <= 2; ++k) {
        const double wgt = keys(f - k);
        acc += wgt * img.at(clampi(i0 + k, 0, img.w - 1), y, ch);
    }
    return acc;
}

Image backward_warp(const Image& src, const DisparityMap& d, int s, int t, Kernel kernel) {
    if (d.h != src.h || d.w != src.w)
        throw std::invalid_argument("backward_warp: disparity/image dimension mismatch");
    Image out(src.h, src.w, src.c);
    const double du = static_cast<double>(s - t);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x) {
            const double xs = x + d.at(x, y) * du;
            for (int ch = 0; ch < src.c; ++ch) out.at(x, y, ch) = sample_1d(src, xs, y, kernel, ch);
        }
    return out;
}

Image warp_source_to_source(const Image& other, const DisparityMap& Ds, int sPrime, int s,
                            Kernel kernel) {
    return backward_warp(other, Ds, sPrime, s, kernel);
}

DisparityMap forward_warp_disparity(const DisparityMap& Ds, int s, int t) {
    DisparityMap out(Ds.h, Ds.w);
    const double du = static_cast<double>(t - s);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < Ds.h; ++y) {
        std::vector<char> valid(Ds.w, 0);
        for (int xs = 0; xs < Ds.w; ++xs) {
            const double d = Ds.at(xs, y);
            const long xt = std::lround(xs + d * du);
            if (xt < 0 || xt >= Ds.w) continue;
            const int xi = static_cast<int>(xt);
            if (!valid[xi] || d > out.at(xi, y)) {
                out.at(xi, y) = d;
                valid[xi] = 1;
            }
        }
        // nearest valid pixel in the row, ties to the left
        int lastValid = -1;
        std::vector<int> leftIdx(Ds.w, -1);
        for (int x = 0; x < Ds.w; ++x) {
            if (valid[x]) lastValid = x;
            leftIdx[x] = lastValid;
        }
        int nextValid = -1;
        for (int x = Ds.w - 1; x >= 0; --x) {
            if (valid[x]) nextValid = x;
            if (valid[x]) continue;
            const int li = leftIdx[x], ri = nextValid;
            if (li < 0 && ri < 0) { out.at(x, y) = 0.0; continue; }
            if (li < 0) { out.at(x, y) = out.at(ri, y); continue; }
            if (ri < 0) { out.at(x, y) = out.at(li, y); continue; }
            out.at(x, y) = (x - li <= ri - x) ? out.at(li, y) : out.at(ri, y);
        }
    }
    return out;
}

DisparityMap merge_disparities(const std::vector<DisparityMap>& maps) {
    if (maps.empty()) throw std::invalid_argument("merge_disparities: no maps");
    DisparityMap out = maps[0];
    for (std::size_t i = 1; i < maps.size(); ++i) {
        if (maps[i].h != out.h || maps[i].w != out.w)
            throw std::invalid_argument("merge_disparities: dimension mismatch");
        for (std::size_t p = 0; p < out.data.size(); ++p)
            out.data[p] = std::max(out.data[p], maps[i].data[p]);
    }
    return out;
}

Neighborhood make_neighborhood(int xt, int yt, int s, int t, const WarpConfig& cfg, int W) {
    const int r = static_cast<int>(std::ceil(cfg.dMax * std::abs(s - t)));
    Neighborhood n;
    n.xt = xt;
    n.yt = yt;
    n.K = 2 * r + 1;
    n.coords.resize(n.K);
    for (int k = 0; k < n.K; ++k) n.coords[k] = clampi(xt - r + k, 0, W - 1);
    return n;
}

std::vector<Image> baseline_synthesize(const SparseInput& inputs, int t, const WarpConfig& cfg) {
    inputs.validate();
    std::vector<Image> out;
    out.reserve(inputs.M());
    for (int i = 0; i < inputs.M(); ++i) {
        const int s = inputs.sourceIndices[i];
        DisparityMap dt = forward_warp_disparity(inputs.sourceDisparities[i], s, t);
        out.push_back(backward_warp(inputs.sourceViews[i], dt, s, t, cfg.kernel));
    }
    return out;
}

}  // namespace lf
