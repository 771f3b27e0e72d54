#include "lf/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "lf/io.hpp"

namespace lf {

double psnr(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("psnr: dimension mismatch");
    const Image la = to_luma(a), lb = to_luma(b);
    double mse = 0.0;
    for (std::size_t i = 0; i < la.data.size(); ++i) {
        const double d = la.data[i] - lb.data[i];
        mse += d * d;
    }
    mse /= static_cast<double>(la.data.size());
    if (mse == 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

namespace {

struct GaussWindow {
    static constexpr int radius = 5;
    double w[11][11];

    GaussWindow() {
        const double s2 = 2.0 * 1.5 * 1.5;
        double sum = 0.0;
        for (int y = -radius; y <= radius; ++y)
            for (int x = -radius; x <= radius; ++x) {
                w[y + radius][x + radius] = std::exp(-(x * x + y * y) / s2);
                sum += w[y + radius][x + radius];
            }
        for (auto& row : w)
            for (double& v : row) v /= sum;
    }
};

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("ssim: dimension mismatch");
    if (a.w < 11 || a.h < 11)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");
    static const GaussWindow g;
    const Image la = to_luma(a), lb = to_luma(b);
    constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const int R = GaussWindow::radius;

    double acc = 0.0;
    std::size_t windows = 0;
    for (int cy = R; cy < a.h - R; ++cy) {
        for (int cx = R; cx < a.w - R; ++cx) {
            double ma = 0, mb = 0, ea2 = 0, eb2 = 0, eab = 0;
            for (int dy = -R; dy <= R; ++dy)
                for (int dx = -R; dx <= R; ++dx) {
                    const double wv = g.w[dy + R][dx + R];
                    const double va = la.at(cx + dx, cy + dy);
                    const double vb = lb.at(cx + dx, cy + dy);
                    ma += wv * va;
                    mb += wv * vb;
                    ea2 += wv * va * va;
                    eb2 += wv * vb * vb;
                    eab += wv * va * vb;
                }
            const double sa2 = ea2 - ma * ma;
            const double sb2 = eb2 - mb * mb;
            const double cov = eab - ma * mb;
            acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
                   ((ma * ma + mb * mb + c1) * (sa2 + sb2 + c2));
            ++windows;
        }
    }
    return acc / static_cast<double>(windows);
}

MetricReport make_metric_report(std::string mode, std::vector<ViewMetric> views) {
    MetricReport r;
    r.mode = std::move(mode);
    r.views = std::move(views);
    if (!r.views.empty()) {
        for (const auto& v : r.views) {
            r.avgPsnr += v.psnr;
            r.avgSsim += v.ssim;
        }
        r.avgPsnr /= static_cast<double>(r.views.size());
        r.avgSsim /= static_cast<double>(r.views.size());
    }
    return r;
}

nlohmann::json metric_report_to_json(const MetricReport& r) {
    nlohmann::json views = nlohmann::json::array();
    for (const auto& v : r.views)
        views.push_back({{"u", v.u}, {"psnr", v.psnr}, {"ssim", v.ssim}, {"seconds", v.seconds}});
    return nlohmann::json{
        {"mode", r.mode}, {"views", views}, {"avgPsnr", r.avgPsnr}, {"avgSsim", r.avgSsim}};
}

void export_epi(const LightField3D& lf, int y, const std::string& path) {
    const Epi e = extract_epi(lf, y);
    const int scale = 8;
    Image img(e.U * scale, e.W, lf.C());
    for (int u = 0; u < e.U; ++u)
        for (int x = 0; x < e.W; ++x)
            for (int ch = 0; ch < lf.C(); ++ch)
                for (int r = 0; r < scale; ++r) img.at(x, u * scale + r, ch) = e.at(u, x, ch);
    write_png16(path, img);
}

}  // namespace lf
