#include "lf/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lf {

LossReport make_loss_report(double reconFinal, double reconBlend,
                            std::vector<double> reconPerSource, double epiLoss,
                            double lambda) {
    LossReport r;
    r.reconFinal = reconFinal;
    r.reconBlend = reconBlend;
    r.reconPerSource = std::move(reconPerSource);
    r.epiLoss = epiLoss;
    r.lambda = lambda;
    r.total = r.reconSum() + lambda * epiLoss;
    return r;
}

double mean_abs(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("mean_abs: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
    return acc / static_cast<double>(a.data.size());
}

double recon_loss(const Image& finalImg, const Image& blendImg,
                  const std::vector<Image>& perSource, const Image& gt) {
    double s = mean_abs(finalImg, gt) + mean_abs(blendImg, gt);
    for (const auto& img : perSource) s += mean_abs(img, gt);
    return s;
}

namespace {

void epi_gradient_into(const double* next, const double* cur, const double* d,
                       double* out, int c, int h, int w) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) {
            const double* arow = next + ch * plane + static_cast<std::size_t>(y) * w;
            const double* brow = cur + ch * plane + static_cast<std::size_t>(y) * w;
            double* orow = out + ch * plane + static_cast<std::size_t>(y) * w;
            const double* drow = d + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
                const double xs = x + drow[x];
                const int i0 = static_cast<int>(std::floor(xs));
                const double f = xs - i0;
                const int i0c = std::clamp(i0, 0, w - 1);
                const int i1c = std::clamp(i0 + 1, 0, w - 1);
                orow[x] = (1.0 - f) * arow[i0c] + f * arow[i1c] - brow[x];
            }
        }
}

Tensor image_chw(const Image& img) {
    Tensor t({img.c, img.h, img.w});
    for (int ch = 0; ch < img.c; ++ch)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) t.at3(ch, y, x) = img.at(x, y, ch);
    return t;
}

}  // namespace

std::vector<Tensor> epi_gradients(const LightField3D& lf,
                                  const std::vector<DisparityMap>& disp) {
    lf.validate();
    if (static_cast<int>(disp.size()) < lf.U() - 1)
        throw std::invalid_argument("epi_gradients: need a disparity map per non-final view");
    const int C = lf.C(), H = lf.H(), W = lf.W();
    std::vector<Tensor> out;
    for (int u = 0; u + 1 < lf.U(); ++u) {
        const Tensor next = image_chw(lf.views[static_cast<std::size_t>(u) + 1]);
        const Tensor cur = image_chw(lf.views[static_cast<std::size_t>(u)]);
        Tensor g({C, H, W});
        epi_gradient_into(next.data(), cur.data(), disp[static_cast<std::size_t>(u)].data.data(),
                          g.data(), C, H, W);
        out.push_back(std::move(g));
    }
    return out;
}

Tensor epi_gradient_patch(const Tensor& next, const Tensor& cur, const Tensor& d) {
    if (!next.same_shape(cur) || next.rank() != 3)
        throw std::invalid_argument("epi_gradient_patch: need matching (C,h,w) crops");
    if (d.rank() != 2 || d.dim(0) != next.dim(1) || d.dim(1) != next.dim(2))
        throw std::invalid_argument("epi_gradient_patch: disparity crop shape mismatch");
    Tensor g(next.shape());
    epi_gradient_into(next.data(), cur.data(), d.data(), g.data(), next.dim(0), next.dim(1),
                      next.dim(2));
    return g;
}

double disparity_loss(const LightField3D& pred, const LightField3D& gt,
                      const std::vector<DisparityMap>& gtDisp) {
    const std::vector<Tensor> gPred = epi_gradients(pred, gtDisp);
    const std::vector<Tensor> gGt = epi_gradients(gt, gtDisp);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t u = 0; u < gPred.size(); ++u) {
        for (std::size_t i = 0; i < gPred[u].size(); ++i)
            acc += std::abs(gPred[u][i] - gGt[u][i]);
        n += gPred[u].size();
    }
    return acc / static_cast<double>(n);
}

double total_loss(const std::vector<LossReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("total_loss: no reports");
    double s = 0.0;
    for (const auto& r : reports) s += r.reconSum();
    return s + reports[0].lambda * reports[0].epiLoss;
}

}  // namespace lf
