#include "lf/kernels.hpp"

#include <cstring>

namespace lf::kernels {

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
    std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(m) * n);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* crow = c + static_cast<std::size_t>(i) * n;
        const double* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            const double* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    // C is m*n and assumed cache-resident; stream A and B once.
    std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(m) * n);
    for (int p = 0; p < k; ++p) {
        const double* arow = a + static_cast<std::size_t>(p) * m;
        const double* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void transpose(const double* a, double* b, int m, int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            b[static_cast<std::size_t>(j) * m + i] = a[static_cast<std::size_t>(i) * n + j];
}

void colsum(const double* a, double* out, int m, int n) {
    std::memset(out, 0, sizeof(double) * static_cast<std::size_t>(n));
    for (int i = 0; i < m; ++i) {
        const double* arow = a + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) out[j] += arow[j];
    }
}

void im2col3x3(const double* x, double* cols, int c, int h, int w) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int ncols = c * 9;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int xi = 0; xi < w; ++xi) {
            double* dst = cols + (static_cast<std::size_t>(y) * w + xi) * ncols;
            for (int ci = 0; ci < c; ++ci) {
                const double* src = x + static_cast<std::size_t>(ci) * plane;
                for (int dy = 0; dy < 3; ++dy) {
                    const int sy = y + dy - 1;
                    for (int dx = 0; dx < 3; ++dx) {
                        const int sx = xi + dx - 1;
                        const bool in = sy >= 0 && sy < h && sx >= 0 && sx < w;
                        dst[ci * 9 + dy * 3 + dx] = in ? src[static_cast<std::size_t>(sy) * w + sx] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im3x3(const double* cols, double* x, int c, int h, int w) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int ncols = c * 9;
    std::memset(x, 0, sizeof(double) * static_cast<std::size_t>(c) * plane);
#pragma omp parallel for schedule(static) collapse(2)
    for (int ci = 0; ci < c; ++ci) {
        for (int iy = 0; iy < h; ++iy) {
            double* dst = x + static_cast<std::size_t>(ci) * plane + static_cast<std::size_t>(iy) * w;
            for (int ix = 0; ix < w; ++ix) {
                double acc = 0.0;
                for (int dy = 0; dy < 3; ++dy) {
                    const int oy = iy - dy + 1;
                    if (oy < 0 || oy >= h) continue;
                    for (int dx = 0; dx < 3; ++dx) {
                        const int ox = ix - dx + 1;
                        if (ox < 0 || ox >= w) continue;
                        acc += cols[(static_cast<std::size_t>(oy) * w + ox) * ncols + ci * 9 + dy * 3 + dx];
                    }
                }
                dst[ix] = acc;
            }
        }
    }
}

void conv3x3_direct(const double* x, const double* kern, const double* bias,
                    double* y, int ci, int co, int h, int w) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
#pragma omp parallel for schedule(static) collapse(2)
    for (int oc = 0; oc < co; ++oc) {
        for (int oy = 0; oy < h; ++oy) {
            double* dst = y + static_cast<std::size_t>(oc) * plane + static_cast<std::size_t>(oy) * w;
            for (int ox = 0; ox < w; ++ox) {
                // accumulate taps first, bias last: matches the im2col+gemm order bit for bit
                double acc = 0.0;
                for (int ic = 0; ic < ci; ++ic) {
                    const double* src = x + static_cast<std::size_t>(ic) * plane;
                    const double* kk = kern + (static_cast<std::size_t>(oc) * ci + ic) * 9;
                    for (int dy = 0; dy < 3; ++dy) {
                        const int sy = oy + dy - 1;
                        if (sy < 0 || sy >= h) continue;
                        for (int dx = 0; dx < 3; ++dx) {
                            const int sx = ox + dx - 1;
                            if (sx < 0 || sx >= w) continue;
                            acc += kk[dy * 3 + dx] * src[static_cast<std::size_t>(sy) * w + sx];
                        }
                    }
                }
                dst[ox] = bias ? acc + bias[oc] : acc;
            }
        }
    }
}

namespace serial {

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p)
                acc += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
    }
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p)
                acc += a[static_cast<std::size_t>(p) * m + i] * b[static_cast<std::size_t>(p) * n + j];
            c[static_cast<std::size_t>(i) * n + j] = acc;
        }
    }
}

void conv3x3_direct(const double* x, const double* kern, const double* bias,
                    double* y, int ci, int co, int h, int w) {
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < co; ++oc) {
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                double acc = 0.0;
                for (int ic = 0; ic < ci; ++ic) {
                    const double* src = x + static_cast<std::size_t>(ic) * plane;
                    const double* kk = kern + (static_cast<std::size_t>(oc) * ci + ic) * 9;
                    for (int dy = 0; dy < 3; ++dy) {
                        const int sy = oy + dy - 1;
                        if (sy < 0 || sy >= h) continue;
                        for (int dx = 0; dx < 3; ++dx) {
                            const int sx = ox + dx - 1;
                            if (sx < 0 || sx >= w) continue;
                            acc += kk[dy * 3 + dx] * src[static_cast<std::size_t>(sy) * w + sx];
                        }
                    }
                }
                y[(static_cast<std::size_t>(oc) * h + oy) * w + ox] = bias ? acc + bias[oc] : acc;
            }
        }
    }
}

}  // namespace serial

}  // namespace lf::kernels
