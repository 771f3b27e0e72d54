#include <doctest.h>

#include <cstring>
#include <vector>

#include "lf/kernels.hpp"
#include "lf/rng.hpp"
#include "lf/threads.hpp"

using namespace lf::kernels;

namespace {

std::vector<double> rand_vec(lf::Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.normal();
    return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct ThreadGuard {
    ~ThreadGuard() { lf::set_thread_count(0); }
};

}  // namespace

TEST_CASE("gemm_nn matches the serial reference bit for bit") {
    ThreadGuard tg;
    lf::Rng rng(1);
    const int m = 37, k = 19, n = 23;
    auto a = rand_vec(rng, static_cast<std::size_t>(m) * k);
    auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
    std::vector<double> ref(static_cast<std::size_t>(m) * n), out(ref.size());
    serial::gemm_nn(a.data(), b.data(), ref.data(), m, k, n);
    for (int threads : {1, 2, 3, 8}) {
        lf::set_thread_count(threads);
        gemm_nn(a.data(), b.data(), out.data(), m, k, n);
        CHECK(bit_equal(ref, out));
    }
}

TEST_CASE("gemm_tn matches the serial reference bit for bit") {
    ThreadGuard tg;
    lf::Rng rng(2);
    const int m = 18, k = 41, n = 7;
    auto a = rand_vec(rng, static_cast<std::size_t>(k) * m);
    auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
    std::vector<double> ref(static_cast<std::size_t>(m) * n), out(ref.size());
    serial::gemm_tn(a.data(), b.data(), ref.data(), m, k, n);
    for (int threads : {1, 3}) {
        lf::set_thread_count(threads);
        gemm_tn(a.data(), b.data(), out.data(), m, k, n);
        CHECK(bit_equal(ref, out));
    }
}

TEST_CASE("gemm_nn against a plain triple loop") {
    lf::Rng rng(3);
    const int m = 5, k = 4, n = 6;
    auto a = rand_vec(rng, static_cast<std::size_t>(m) * k);
    auto b = rand_vec(rng, static_cast<std::size_t>(k) * n);
    std::vector<double> out(static_cast<std::size_t>(m) * n);
    gemm_nn(a.data(), b.data(), out.data(), m, k, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            CHECK(out[i * n + j] == doctest::Approx(acc).epsilon(1e-13));
        }
}

TEST_CASE("transpose and colsum") {
    ThreadGuard tg;
    lf::Rng rng(4);
    const int m = 13, n = 9;
    auto a = rand_vec(rng, static_cast<std::size_t>(m) * n);
    std::vector<double> b(a.size());
    for (int threads : {1, 4}) {
        lf::set_thread_count(threads);
        transpose(a.data(), b.data(), m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) CHECK(b[j * m + i] == a[i * n + j]);
    }
    std::vector<double> cs(n);
    colsum(a.data(), cs.data(), m, n);
    for (int j = 0; j < n; ++j) {
        double acc = 0;
        for (int i = 0; i < m; ++i) acc += a[i * n + j];
        CHECK(cs[j] == acc);  // same accumulation order
    }
}

TEST_CASE("im2col places taps with zero padding") {
    lf::Rng rng(5);
    const int c = 2, h = 4, w = 5;
    auto x = rand_vec(rng, static_cast<std::size_t>(c) * h * w);
    std::vector<double> cols(static_cast<std::size_t>(h) * w * c * 9);
    im2col3x3(x.data(), cols.data(), c, h, w);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            for (int ci = 0; ci < c; ++ci)
                for (int dy = 0; dy < 3; ++dy)
                    for (int dx = 0; dx < 3; ++dx) {
                        int sy = y + dy - 1, sx = xx + dx - 1;
                        double want = (sy < 0 || sy >= h || sx < 0 || sx >= w)
                                          ? 0.0
                                          : x[(ci * h + sy) * w + sx];
                        CHECK(cols[(static_cast<std::size_t>(y) * w + xx) * (c * 9) + ci * 9 +
                                   dy * 3 + dx] == want);
                    }
}

TEST_CASE("col2im is the scatter-add adjoint of im2col") {
    ThreadGuard tg;
    lf::Rng rng(6);
    const int c = 3, h = 5, w = 4;
    std::vector<double> cols =
        rand_vec(rng, static_cast<std::size_t>(h) * w * c * 9);
    std::vector<double> ref(static_cast<std::size_t>(c) * h * w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx)
            for (int ci = 0; ci < c; ++ci)
                for (int dy = 0; dy < 3; ++dy)
                    for (int dx = 0; dx < 3; ++dx) {
                        int sy = y + dy - 1, sx = xx + dx - 1;
                        if (sy < 0 || sy >= h || sx < 0 || sx >= w) continue;
                        ref[(ci * h + sy) * w + sx] +=
                            cols[(static_cast<std::size_t>(y) * w + xx) * (c * 9) + ci * 9 +
                                 dy * 3 + dx];
                    }
    std::vector<double> out(ref.size());
    for (int threads : {1, 3}) {
        lf::set_thread_count(threads);
        col2im3x3(cols.data(), out.data(), c, h, w);
        for (std::size_t i = 0; i < ref.size(); ++i)
            CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-13));
    }
}

TEST_CASE("direct conv matches serial reference and the im2col+gemm route bit for bit") {
    ThreadGuard tg;
    lf::Rng rng(7);
    const int ci = 3, co = 5, h = 7, w = 6;
    auto x = rand_vec(rng, static_cast<std::size_t>(ci) * h * w);
    auto kern = rand_vec(rng, static_cast<std::size_t>(co) * ci * 9);
    auto bias = rand_vec(rng, co);

    std::vector<double> ref(static_cast<std::size_t>(co) * h * w);
    serial::conv3x3_direct(x.data(), kern.data(), bias.data(), ref.data(), ci, co, h, w);

    std::vector<double> out(ref.size());
    for (int threads : {1, 2, 5}) {
        lf::set_thread_count(threads);
        conv3x3_direct(x.data(), kern.data(), bias.data(), out.data(), ci, co, h, w);
        CHECK(bit_equal(ref, out));
    }

    // the tape's route: cols(HW, Ci*9) * k^T(Ci*9, Co), bias added last
    std::vector<double> cols(static_cast<std::size_t>(h) * w * ci * 9);
    im2col3x3(x.data(), cols.data(), ci, h, w);
    std::vector<double> kT(kern.size());
    transpose(kern.data(), kT.data(), co, ci * 9);
    std::vector<double> rows(static_cast<std::size_t>(h) * w * co);
    gemm_nn(cols.data(), kT.data(), rows.data(), h * w, ci * 9, co);
    for (int p = 0; p < h * w; ++p)
        for (int oc = 0; oc < co; ++oc) {
            double viaGemm = rows[static_cast<std::size_t>(p) * co + oc] + bias[oc];
            CHECK(viaGemm == ref[static_cast<std::size_t>(oc) * h * w + p]);
        }
}

TEST_CASE("conv bias enters after all taps") {
    // a lone bias on zero input must come through untouched
    const int ci = 1, co = 2, h = 3, w = 3;
    std::vector<double> x(static_cast<std::size_t>(ci) * h * w, 0.0);
    std::vector<double> kern(static_cast<std::size_t>(co) * ci * 9, 0.25);
    std::vector<double> bias = {0.1, -0.7};
    std::vector<double> y(static_cast<std::size_t>(co) * h * w);
    conv3x3_direct(x.data(), kern.data(), bias.data(), y.data(), ci, co, h, w);
    for (int p = 0; p < h * w; ++p) {
        CHECK(y[p] == 0.1);
        CHECK(y[h * w + p] == -0.7);
    }
}
