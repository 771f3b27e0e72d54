#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace lf {

// Row-major (y, x, channel) interleaved intensities in [0,1].
struct Image {
    int h = 0, w = 0, c = 1;
    std::vector<double> data;

    Image() = default;
    Image(int h_, int w_, int c_, double fill = 0.0) : h(h_), w(w_), c(c_) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3))
            throw std::invalid_argument("Image: bad dimensions " + std::to_string(h_) + "x" +
                                        std::to_string(w_) + "x" + std::to_string(c_));
        data.assign(static_cast<std::size_t>(h) * w * c, fill);
    }

    double& at(int x, int y, int ch = 0) {
        return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    double at(int x, int y, int ch = 0) const {
        return data[(static_cast<std::size_t>(y) * w + x) * c + ch];
    }
    bool same_dims(const Image& o) const { return h == o.h && w == o.w && c == o.c; }
};

struct DisparityMap {
    int h = 0, w = 0;
    std::vector<double> data;

    DisparityMap() = default;
    DisparityMap(int h_, int w_, double fill = 0.0) : h(h_), w(w_) {
        if (h <= 0 || w <= 0)
            throw std::invalid_argument("DisparityMap: bad dimensions");
        data.assign(static_cast<std::size_t>(h) * w, fill);
    }

    double& at(int x, int y) { return data[static_cast<std::size_t>(y) * w + x]; }
    double at(int x, int y) const { return data[static_cast<std::size_t>(y) * w + x]; }
};

// Ordered stack of U views on a 1-D angular line.
struct LightField3D {
    std::vector<Image> views;

    int U() const { return static_cast<int>(views.size()); }
    int H() const { return views.empty() ? 0 : views[0].h; }
    int W() const { return views.empty() ? 0 : views[0].w; }
    int C() const { return views.empty() ? 0 : views[0].c; }

    void validate() const {
        if (views.size() < 1) throw std::invalid_argument("LightField3D: no views");
        for (const auto& v : views)
            if (!v.same_dims(views[0]))
                throw std::invalid_argument("LightField3D: views disagree on dimensions");
    }
};

// EPI slice at a fixed row: (u, x, channel) interleaved.
struct Epi {
    int U = 0, W = 0, C = 1;
    int y = 0;
    std::vector<double> data;

    double at(int u, int x, int ch = 0) const {
        return data[(static_cast<std::size_t>(u) * W + x) * C + ch];
    }
};

// M = 2 source views with their disparity maps.
struct SparseInput {
    std::vector<int> sourceIndices;
    std::vector<Image> sourceViews;
    std::vector<DisparityMap> sourceDisparities;

    int M() const { return static_cast<int>(sourceIndices.size()); }
    void validate() const;
};

Epi extract_epi(const LightField3D& lf, int y);
Image to_luma(const Image& img);
void clamp01(Image& img);

}  // namespace lf
