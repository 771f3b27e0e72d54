#include "lf/image.hpp"

#include <algorithm>

namespace lf {

void SparseInput::validate() const {
    if (sourceIndices.size() != 2)
        throw std::invalid_argument("SparseInput: exactly 2 source views required");
    if (sourceViews.size() != sourceIndices.size() ||
        sourceDisparities.size() != sourceIndices.size())
        throw std::invalid_argument("SparseInput: views/disparities count mismatch");
    if (sourceIndices[0] >= sourceIndices[1])
        throw std::invalid_argument("SparseInput: source indices must be strictly increasing");
    for (std::size_t i = 0; i < sourceViews.size(); ++i) {
        const Image& v = sourceViews[i];
        const DisparityMap& d = sourceDisparities[i];
        if (!v.same_dims(sourceViews[0]))
            throw std::invalid_argument("SparseInput: source views disagree on dimensions");
        if (d.h != v.h || d.w != v.w)
            throw std::invalid_argument("SparseInput: disparity map not dimensioned to its view");
    }
}

Epi extract_epi(const LightField3D& lf, int y) {
    lf.validate();
    if (y < 0 || y >= lf.H())
        throw std::out_of_range("extract_epi: row " + std::to_string(y) + " out of range [0," +
                                std::to_string(lf.H()) + ")");
    Epi e;
    e.U = lf.U();
    e.W = lf.W();
    e.C = lf.C();
    e.y = y;
    e.data.resize(static_cast<std::size_t>(e.U) * e.W * e.C);
    for (int u = 0; u < e.U; ++u)
        for (int x = 0; x < e.W; ++x)
            for (int ch = 0; ch < e.C; ++ch)
                e.data[(static_cast<std::size_t>(u) * e.W + x) * e.C + ch] = lf.views[u].at(x, y, ch);
    return e;
}

Image to_luma(const Image& img) {
    if (img.c == 1) return img;
    Image out(img.h, img.w, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x) {
            double v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            out.at(x, y) = std::clamp(v, 0.0, 1.0);
        }
    return out;
}

void clamp01(Image& img) {
    for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

}  // namespace lf
