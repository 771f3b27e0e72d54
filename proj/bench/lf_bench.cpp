#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "lf/kernels.hpp"
#include "lf/nn.hpp"
#include "lf/rng.hpp"
#include "lf/tape.hpp"
#include "lf/tensor.hpp"
#include "lf/threads.hpp"

namespace {

std::vector<double> rand_vec(lf::Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

double time_ms(const std::function<void()>& f) {
    f();  // warm up
    int reps = 1;
    double elapsed = 0.0;
    for (;;) {
        auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < reps; ++i) f();
        elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > 0.2 || reps >= 1 << 14) break;
        reps *= 2;
    }
    return 1e3 * elapsed / reps;
}

void row(const std::string& name, const std::string& shape, double serialMs, double ompMs) {
    std::printf("%-26s %-22s %10.3f %10.3f %9.2fx\n", name.c_str(), shape.c_str(), serialMs,
                ompMs, serialMs / ompMs);
}

}  // namespace

int main() {
    using namespace lf::kernels;
    std::printf("threads: %d\n\n", lf::thread_count());
    std::printf("%-26s %-22s %10s %10s %10s\n", "kernel", "shape", "serial ms", "omp ms",
                "speedup");

    lf::Rng rng(7);

    {
        // weight-MLP shape: one 32x32 patch of pixels, K=13 neighbors each
        const int m = 32 * 32 * 13, k = 20, n = 64;
        auto a = rand_vec(rng, static_cast<std::size_t>(m) * k);
        auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
        std::vector<double> c(static_cast<std::size_t>(m) * n);
        double s = time_ms([&] { serial::gemm_nn(a.data(), b.data(), c.data(), m, k, n); });
        double p = time_ms([&] { gemm_nn(a.data(), b.data(), c.data(), m, k, n); });
        row("gemm_nn", "13312x20 * 20x64", s, p);
    }
    {
        // feature-extractor shape: 64x64 image, 16 channels, 3x3 taps
        const int m = 64 * 64, k = 16 * 9, n = 16;
        auto a = rand_vec(rng, static_cast<std::size_t>(m) * k);
        auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
        std::vector<double> c(static_cast<std::size_t>(m) * n);
        double s = time_ms([&] { serial::gemm_nn(a.data(), b.data(), c.data(), m, k, n); });
        double p = time_ms([&] { gemm_nn(a.data(), b.data(), c.data(), m, k, n); });
        row("gemm_nn", "4096x144 * 144x16", s, p);
    }
    {
        const int m = 144, k = 64 * 64, n = 16;
        auto a = rand_vec(rng, static_cast<std::size_t>(k) * m);
        auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
        std::vector<double> c(static_cast<std::size_t>(m) * n);
        double s = time_ms([&] { serial::gemm_tn(a.data(), b.data(), c.data(), m, k, n); });
        double p = time_ms([&] { gemm_tn(a.data(), b.data(), c.data(), m, k, n); });
        row("gemm_tn", "144x4096 * 4096x16", s, p);
    }
    {
        const int ci = 16, co = 16, h = 64, w = 64;
        auto x = rand_vec(rng, static_cast<std::size_t>(ci) * h * w);
        auto kern = rand_vec(rng, static_cast<std::size_t>(co) * ci * 9);
        auto bias = rand_vec(rng, co);
        std::vector<double> y(static_cast<std::size_t>(co) * h * w);
        double s = time_ms([&] {
            serial::conv3x3_direct(x.data(), kern.data(), bias.data(), y.data(), ci, co, h, w);
        });
        double p = time_ms(
            [&] { conv3x3_direct(x.data(), kern.data(), bias.data(), y.data(), ci, co, h, w); });
        row("conv3x3_direct", "16ch 64x64 -> 16ch", s, p);

        std::vector<double> cols(static_cast<std::size_t>(h) * w * ci * 9);
        double im = time_ms([&] { im2col3x3(x.data(), cols.data(), ci, h, w); });
        row("im2col3x3", "16ch 64x64", im, im);
    }
    {
        const int m = 4096, n = 144;
        auto a = rand_vec(rng, static_cast<std::size_t>(m) * n);
        std::vector<double> b(a.size());
        double t = time_ms([&] { transpose(a.data(), b.data(), m, n); });
        row("transpose", "4096x144", t, t);
    }
    {
        // full feature extractor forward on one source view
        lf::ArchConfig arch;
        arch.channels = 1;
        arch.kValues = {13};
        lf::ModelParams params = lf::init_model(arch, 11);
        lf::Tensor stack({arch.stackChannels(), 64, 64});
        for (std::size_t i = 0; i < stack.size(); ++i) stack[i] = rng.uniform();
        auto run = [&] {
            lf::ad::Tape tape(false);
            lf::ParamVars pv(tape, params, false);
            lf::content_net(tape, pv, stack, arch);
        };
        double t1 = time_ms(run);
        lf::set_thread_count(1);
        double t0 = time_ms(run);
        lf::set_thread_count(0);
        row("content_net fwd", "3ch 64x64, F=16", t0, t1);
    }

    return 0;
}
