#pragma once

#include <vector>

#include "lf/image.hpp"
#include "lf/tensor.hpp"

namespace lf {

// Per-view training loss breakdown. total = reconFinal + reconBlend +
// sum(reconPerSource) + lambda * epiLoss; the epi term is shared by all
// views of a scene and repeated in every report.
struct LossReport {
    double reconFinal = 0.0;
    double reconBlend = 0.0;
    std::vector<double> reconPerSource;
    double epiLoss = 0.0;
    double lambda = 0.0;
    double total = 0.0;

    double reconSum() const {
        double s = reconFinal + reconBlend;
        for (double v : reconPerSource) s += v;
        return s;
    }
};

LossReport make_loss_report(double reconFinal, double reconBlend,
                            std::vector<double> reconPerSource, double epiLoss,
                            double lambda);

double mean_abs(const Image& a, const Image& b);

// reconFinal + reconBlend + per-source terms against the same ground truth.
double recon_loss(const Image& finalImg, const Image& blendImg,
                  const std::vector<Image>& perSource, const Image& gt);

// Directional EPI gradient of view u: view u+1 sampled at x + d_u(x,y)
// (linear, taps clamped to the row) minus view u. One (C,H,W) stack per
// u = 0 .. U-2.
std::vector<Tensor> epi_gradients(const LightField3D& lf,
                                  const std::vector<DisparityMap>& disp);

// Same formula on (C,h,w) crops of two consecutive views; d is (h,w).
Tensor epi_gradient_patch(const Tensor& next, const Tensor& cur, const Tensor& d);

// Mean L1 between predicted and ground-truth EPI gradients, averaged over
// every entry of all U-1 stacks.
double disparity_loss(const LightField3D& pred, const LightField3D& gt,
                      const std::vector<DisparityMap>& gtDisp);

// Combined objective: sum of per-view reconstruction totals plus
// lambda * epiLoss counted once (taken from the first report).
double total_loss(const std::vector<LossReport>& reports);

}  // namespace lf
