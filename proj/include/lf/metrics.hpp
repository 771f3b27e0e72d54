#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lf/image.hpp"

namespace lf {

// Peak-signal-to-noise ratio on luma, peak 1.0, capped at 99 dB (also the
// value for identical images). Symmetric in its arguments.
double psnr(const Image& a, const Image& b);

// Mean SSIM on luma over all fully-inside 11x11 windows, Gaussian weights
// sigma 1.5, K1 = 0.01, K2 = 0.03, L = 1.
double ssim(const Image& a, const Image& b);

struct ViewMetric {
    int u = 0;
    double psnr = 0, ssim = 0, seconds = 0;
};

struct MetricReport {
    std::string mode;
    std::vector<ViewMetric> views;
    double avgPsnr = 0, avgSsim = 0;
};

MetricReport make_metric_report(std::string mode, std::vector<ViewMetric> views);
nlohmann::json metric_report_to_json(const MetricReport& r);

// Writes the EPI of image row y as a PNG, each angular row repeated 8 times
// so the slopes are visible.
void export_epi(const LightField3D& lf, int y, const std::string& path);

}  // namespace lf
