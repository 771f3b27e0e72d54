#include "lf/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "lf/kernels.hpp"

namespace lf::ad {
namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("tape: " + msg);
}

bool all_finite(const Tensor& t) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(t[i])) return false;
    return true;
}

constexpr double kLreluSlope = 0.1;

}  // namespace

std::size_t Tape::check(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= values_.size())
        throw std::out_of_range("tape: invalid Var");
    return static_cast<std::size_t>(v.id);
}

Var Tape::push(Tensor value, bool requiresGrad, std::function<void()> back,
               const char* opName) {
    if (checkFinite_ && !all_finite(value))
        throw std::runtime_error(std::string("tape: non-finite value from ") + opName);
    const int id = static_cast<int>(values_.size());
    const bool rg = requiresGrad && recording_;
    values_.push_back(std::move(value));
    reqGrad_.push_back(rg ? 1 : 0);
    nodes_.push_back(Node{rg ? std::move(back) : std::function<void()>()});
    return Var{id};
}

Tensor& Tape::grad_buf(int id) {
    Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.empty()) g = Tensor(values_[static_cast<std::size_t>(id)].shape(), 0.0);
    return g;
}

void Tape::accumulate(int id, const Tensor& g) {
    if (!reqGrad_[static_cast<std::size_t>(id)]) return;
    Tensor& dst = grads_[static_cast<std::size_t>(id)];
    if (dst.empty()) {
        dst = g;
        return;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

void Tape::backward(Var loss) {
    if (!recording_) throw std::logic_error("tape: backward on a non-recording tape");
    const std::size_t lid = check(loss);
    if (values_[lid].size() != 1)
        throw std::invalid_argument("tape: backward needs a scalar loss, got " +
                                    values_[lid].shape_str());
    grads_.assign(values_.size(), Tensor());
    grads_[lid] = Tensor::scalar(1.0);
    for (int id = static_cast<int>(lid); id >= 0; --id) {
        if (grads_[static_cast<std::size_t>(id)].empty()) continue;
        auto& back = nodes_[static_cast<std::size_t>(id)].back;
        if (back) back();
    }
    ranBackward_ = true;
}

const Tensor* Tape::grad_ptr(Var v) const {
    if (!ranBackward_) throw std::logic_error("tape: grad requested before backward");
    const std::size_t id = check(v);
    return grads_[id].empty() ? nullptr : &grads_[id];
}

const Tensor& Tape::grad(Var v) const {
    const Tensor* g = grad_ptr(v);
    if (!g) throw std::logic_error("tape: no gradient reached this Var");
    return *g;
}

Var Tape::leaf(Tensor value, bool requiresGrad) {
    return push(std::move(value), requiresGrad, {}, "leaf");
}

Var Tape::add(Var a, Var b) {
    const Tensor &va = value(a), &vb = value(b);
    require(va.same_shape(vb), "add: " + va.shape_str() + " vs " + vb.shape_str());
    Tensor out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ia = a.id, ib = b.id, outId] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        accumulate(ia, g);
        accumulate(ib, g);
    };
    return push(std::move(out), requires_grad(a) || requires_grad(b), std::move(back), "add");
}

Var Tape::sub(Var a, Var b) {
    const Tensor &va = value(a), &vb = value(b);
    require(va.same_shape(vb), "sub: " + va.shape_str() + " vs " + vb.shape_str());
    Tensor out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ia = a.id, ib = b.id, outId] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        accumulate(ia, g);
        if (reqGrad_[static_cast<std::size_t>(ib)]) {
            Tensor neg(g.shape());
            for (std::size_t i = 0; i < g.size(); ++i) neg[i] = -g[i];
            accumulate(ib, neg);
        }
    };
    return push(std::move(out), requires_grad(a) || requires_grad(b), std::move(back), "sub");
}

Var Tape::mul(Var a, Var b) {
    const Tensor &va = value(a), &vb = value(b);
    require(va.same_shape(vb), "mul: " + va.shape_str() + " vs " + vb.shape_str());
    Tensor out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ia = a.id, ib = b.id, outId] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        const Tensor &xa = values_[static_cast<std::size_t>(ia)];
        const Tensor &xb = values_[static_cast<std::size_t>(ib)];
        if (reqGrad_[static_cast<std::size_t>(ia)]) {
            Tensor da(g.shape());
            for (std::size_t i = 0; i < g.size(); ++i) da[i] = g[i] * xb[i];
            accumulate(ia, da);
        }
        if (reqGrad_[static_cast<std::size_t>(ib)]) {
            Tensor db(g.shape());
            for (std::size_t i = 0; i < g.size(); ++i) db[i] = g[i] * xa[i];
            accumulate(ib, db);
        }
    };
    return push(std::move(out), requires_grad(a) || requires_grad(b), std::move(back), "mul");
}

Var Tape::scale(Var a, double c) {
    const Tensor& va = value(a);
    Tensor out(va.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * va[i];
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ia = a.id, c, outId] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        if (!reqGrad_[static_cast<std::size_t>(ia)]) return;
        Tensor da(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) da[i] = c * g[i];
        accumulate(ia, da);
    };
    return push(std::move(out), requires_grad(a), std::move(back), "scale");
}

Var Tape::leaky_relu(Var x, double slope) {
    const Tensor& vx = value(x);
    Tensor out(vx.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = vx[i] > 0.0 ? vx[i] : slope * vx[i];
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, slope, outId] {
        if (!reqGrad_[static_cast<std::size_t>(ix)]) return;
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        const Tensor& vx = values_[static_cast<std::size_t>(ix)];
        Tensor da(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i)
            da[i] = g[i] * (vx[i] > 0.0 ? 1.0 : slope);
        accumulate(ix, da);
    };
    return push(std::move(out), requires_grad(x), std::move(back), "leaky_relu");
}

Var Tape::affine(Var x, Var w, Var b, bool fuseLrelu) {
    const Tensor &vx = value(x), &vw = value(w), &vb = value(b);
    require(vx.rank() == 2 && vw.rank() == 2 && vb.rank() == 1,
            "affine: need x(N,I) w(I,O) b(O)");
    const int N = vx.dim(0), I = vx.dim(1), O = vw.dim(1);
    require(vw.dim(0) == I && vb.dim(0) == O, "affine: inner dimensions disagree");

    Tensor out({N, O});
    kernels::gemm_nn(vx.data(), vw.data(), out.data(), N, I, O);
    for (int r = 0; r < N; ++r) {
        double* row = out.data() + static_cast<std::size_t>(r) * O;
        for (int j = 0; j < O; ++j) row[j] += vb[static_cast<std::size_t>(j)];
    }
    if (fuseLrelu)
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i] <= 0.0) out[i] *= kLreluSlope;

    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, iw = w.id, ib = b.id, outId, N, I, O, fuseLrelu] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        const Tensor& y = values_[static_cast<std::size_t>(outId)];
        Tensor gPre;
        const Tensor* gp = &g;
        if (fuseLrelu) {
            gPre = Tensor({N, O});
            for (std::size_t i = 0; i < g.size(); ++i)
                gPre[i] = g[i] * (y[i] > 0.0 ? 1.0 : kLreluSlope);
            gp = &gPre;
        }
        const Tensor& vx = values_[static_cast<std::size_t>(ix)];
        const Tensor& vw = values_[static_cast<std::size_t>(iw)];
        if (reqGrad_[static_cast<std::size_t>(ix)]) {
            Tensor wT({O, I});
            kernels::transpose(vw.data(), wT.data(), I, O);
            Tensor dx({N, I});
            kernels::gemm_nn(gp->data(), wT.data(), dx.data(), N, O, I);
            accumulate(ix, dx);
        }
        if (reqGrad_[static_cast<std::size_t>(iw)]) {
            Tensor dw({I, O});
            kernels::gemm_tn(vx.data(), gp->data(), dw.data(), I, N, O);
            accumulate(iw, dw);
        }
        if (reqGrad_[static_cast<std::size_t>(ib)]) {
            Tensor db({O});
            kernels::colsum(gp->data(), db.data(), N, O);
            accumulate(ib, db);
        }
    };
    const bool rg = requires_grad(x) || requires_grad(w) || requires_grad(b);
    return push(std::move(out), rg, std::move(back), "affine");
}

Var Tape::conv3x3(Var x, Var k, Var b, bool fuseLrelu) {
    const Tensor &vx = value(x), &vk = value(k), &vb = value(b);
    require(vx.rank() == 3 && vk.rank() == 4 && vb.rank() == 1,
            "conv3x3: need x(Ci,H,W) k(Co,Ci,3,3) b(Co)");
    const int Ci = vx.dim(0), H = vx.dim(1), W = vx.dim(2);
    const int Co = vk.dim(0);
    require(vk.dim(1) == Ci && vk.dim(2) == 3 && vk.dim(3) == 3 && vb.dim(0) == Co,
            "conv3x3: kernel/bias dimensions disagree");
    const int HW = H * W, Ci9 = Ci * 9;

    Tensor cols({HW, Ci9});
    kernels::im2col3x3(vx.data(), cols.data(), Ci, H, W);
    Tensor kT({Ci9, Co});
    kernels::transpose(vk.data(), kT.data(), Co, Ci9);
    Tensor rows({HW, Co});
    kernels::gemm_nn(cols.data(), kT.data(), rows.data(), HW, Ci9, Co);
    for (int p = 0; p < HW; ++p) {
        double* row = rows.data() + static_cast<std::size_t>(p) * Co;
        for (int co = 0; co < Co; ++co) row[co] += vb[static_cast<std::size_t>(co)];
    }
    Tensor out({Co, H, W});
    kernels::transpose(rows.data(), out.data(), HW, Co);
    if (fuseLrelu)
        for (std::size_t i = 0; i < out.size(); ++i)
            if (out[i] <= 0.0) out[i] *= kLreluSlope;

    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, ik = k.id, ib = b.id, outId, Ci, Co, H, W, fuseLrelu] {
        const int HW = H * W, Ci9 = Ci * 9;
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        const Tensor& y = values_[static_cast<std::size_t>(outId)];
        Tensor gPre;
        const Tensor* gp = &g;
        if (fuseLrelu) {
            gPre = Tensor({Co, H, W});
            for (std::size_t i = 0; i < g.size(); ++i)
                gPre[i] = g[i] * (y[i] > 0.0 ? 1.0 : kLreluSlope);
            gp = &gPre;
        }
        Tensor gRows({HW, Co});
        kernels::transpose(gp->data(), gRows.data(), Co, HW);
        const Tensor& vx = values_[static_cast<std::size_t>(ix)];
        const Tensor& vk = values_[static_cast<std::size_t>(ik)];
        if (reqGrad_[static_cast<std::size_t>(ix)]) {
            Tensor dcols({HW, Ci9});
            kernels::gemm_nn(gRows.data(), vk.data(), dcols.data(), HW, Co, Ci9);
            Tensor dx({Ci, H, W});
            kernels::col2im3x3(dcols.data(), dx.data(), Ci, H, W);
            accumulate(ix, dx);
        }
        if (reqGrad_[static_cast<std::size_t>(ik)]) {
            Tensor cols({HW, Ci9});
            kernels::im2col3x3(vx.data(), cols.data(), Ci, H, W);
            Tensor dkT({Ci9, Co});
            kernels::gemm_tn(cols.data(), gRows.data(), dkT.data(), Ci9, HW, Co);
            Tensor dk({Co, Ci, 3, 3});
            for (int co = 0; co < Co; ++co)
                for (int q = 0; q < Ci9; ++q)
                    dk[static_cast<std::size_t>(co) * Ci9 + q] =
                        dkT[static_cast<std::size_t>(q) * Co + co];
            accumulate(ik, dk);
        }
        if (reqGrad_[static_cast<std::size_t>(ib)]) {
            Tensor db({Co});
            kernels::colsum(gRows.data(), db.data(), HW, Co);
            accumulate(ib, db);
        }
    };
    const bool rg = requires_grad(x) || requires_grad(k) || requires_grad(b);
    return push(std::move(out), rg, std::move(back), "conv3x3");
}

Var Tape::softmax_lastdim(Var x) {
    const Tensor& vx = value(x);
    require(vx.rank() >= 1, "softmax_lastdim: rank 0 input");
    const int L = vx.dim(vx.rank() - 1);
    const std::size_t rows = vx.size() / static_cast<std::size_t>(L);
    Tensor out(vx.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = vx.data() + r * L;
        double* dst = out.data() + r * L;
        double m = src[0];
        for (int j = 1; j < L; ++j) m = std::max(m, src[j]);
        double s = 0.0;
        for (int j = 0; j < L; ++j) {
            dst[j] = std::exp(src[j] - m);
            s += dst[j];
        }
        for (int j = 0; j < L; ++j) dst[j] /= s;
    }
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, outId, L, rows] {
        if (!reqGrad_[static_cast<std::size_t>(ix)]) return;
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        const Tensor& y = values_[static_cast<std::size_t>(outId)];
        Tensor dx(y.shape());
        for (std::size_t r = 0; r < rows; ++r) {
            const double* gr = g.data() + r * L;
            const double* yr = y.data() + r * L;
            double dot = 0.0;
            for (int j = 0; j < L; ++j) dot += gr[j] * yr[j];
            double* dr = dx.data() + r * L;
            for (int j = 0; j < L; ++j) dr[j] = yr[j] * (gr[j] - dot);
        }
        accumulate(ix, dx);
    };
    return push(std::move(out), requires_grad(x), std::move(back), "softmax_lastdim");
}

Var Tape::concat(const std::vector<Var>& xs, int axis) {
    require(!xs.empty(), "concat: no inputs");
    const Tensor& first = value(xs[0]);
    const int rank = first.rank();
    require(axis >= 0 && axis < rank, "concat: axis out of range");

    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= static_cast<std::size_t>(first.dim(i));
    for (int i = axis + 1; i < rank; ++i) inner *= static_cast<std::size_t>(first.dim(i));

    int axSum = 0;
    std::vector<int> axLens;
    bool rg = false;
    for (Var v : xs) {
        const Tensor& t = value(v);
        require(t.rank() == rank, "concat: rank mismatch");
        for (int i = 0; i < rank; ++i)
            require(i == axis || t.dim(i) == first.dim(i), "concat: off-axis extent mismatch");
        axLens.push_back(t.dim(axis));
        axSum += t.dim(axis);
        rg = rg || requires_grad(v);
    }

    std::vector<int> shape = first.shape();
    shape[static_cast<std::size_t>(axis)] = axSum;
    Tensor out(shape);
    std::size_t axOff = 0;
    for (std::size_t vi = 0; vi < xs.size(); ++vi) {
        const Tensor& t = value(xs[vi]);
        const std::size_t len = static_cast<std::size_t>(axLens[vi]) * inner;
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = t.data() + o * len;
            double* dst = out.data() + (o * static_cast<std::size_t>(axSum) + axOff) * inner;
            std::copy(src, src + len, dst);
        }
        axOff += static_cast<std::size_t>(axLens[vi]);
    }

    std::vector<int> ids;
    for (Var v : xs) ids.push_back(v.id);
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ids, axLens, outer, inner, axSum, outId] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        std::size_t axOff = 0;
        for (std::size_t vi = 0; vi < ids.size(); ++vi) {
            const std::size_t len = static_cast<std::size_t>(axLens[vi]) * inner;
            if (reqGrad_[static_cast<std::size_t>(ids[vi])]) {
                Tensor slice(values_[static_cast<std::size_t>(ids[vi])].shape());
                for (std::size_t o = 0; o < outer; ++o) {
                    const double* src =
                        g.data() + (o * static_cast<std::size_t>(axSum) + axOff) * inner;
                    std::copy(src, src + len, slice.data() + o * len);
                }
                accumulate(ids[vi], slice);
            }
            axOff += static_cast<std::size_t>(axLens[vi]);
        }
    };
    return push(std::move(out), rg, std::move(back), "concat");
}

Var Tape::reshape(Var x, std::vector<int> shape) {
    Tensor out = value(x).reshaped(std::move(shape));
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, outId] {
        accumulate(ix, grads_[static_cast<std::size_t>(outId)]);
    };
    return push(std::move(out), requires_grad(x), std::move(back), "reshape");
}

Var Tape::rows_from_chw(Var x) {
    const Tensor& vx = value(x);
    require(vx.rank() == 3, "rows_from_chw: need (C,H,W)");
    const int C = vx.dim(0), HW = vx.dim(1) * vx.dim(2);
    Tensor out({HW, C});
    kernels::transpose(vx.data(), out.data(), C, HW);
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, outId, C, HW] {
        if (!reqGrad_[static_cast<std::size_t>(ix)]) return;
        Tensor dx(values_[static_cast<std::size_t>(ix)].shape());
        kernels::transpose(grads_[static_cast<std::size_t>(outId)].data(), dx.data(), HW, C);
        accumulate(ix, dx);
    };
    return push(std::move(out), requires_grad(x), std::move(back), "rows_from_chw");
}

Var Tape::chw_from_rows(Var x, int h, int w) {
    const Tensor& vx = value(x);
    require(vx.rank() == 2, "chw_from_rows: need (N,C)");
    const int N = vx.dim(0), C = vx.dim(1);
    require(N == h * w, "chw_from_rows: N != h*w");
    Tensor out({C, h, w});
    kernels::transpose(vx.data(), out.data(), N, C);
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, outId, N, C] {
        if (!reqGrad_[static_cast<std::size_t>(ix)]) return;
        Tensor dx({N, C});
        kernels::transpose(grads_[static_cast<std::size_t>(outId)].data(), dx.data(), C, N);
        accumulate(ix, dx);
    };
    return push(std::move(out), requires_grad(x), std::move(back), "chw_from_rows");
}

Var Tape::gather_rows(Var x, std::vector<int> idx) {
    const Tensor& vx = value(x);
    require(vx.rank() == 2, "gather_rows: need (R,C)");
    const int R = vx.dim(0), C = vx.dim(1);
    for (int i : idx) require(i >= 0 && i < R, "gather_rows: index out of range");
    const int N = static_cast<int>(idx.size());
    Tensor out({N, C});
    for (int i = 0; i < N; ++i)
        std::copy(vx.data() + static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]) * C,
                  vx.data() + static_cast<std::size_t>(idx[static_cast<std::size_t>(i)]) * C + C,
                  out.data() + static_cast<std::size_t>(i) * C);
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, idx = std::move(idx), outId, C] {
        if (!reqGrad_[static_cast<std::size_t>(ix)]) return;
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        Tensor& dst = grad_buf(ix);
        // serial scatter-add: indices may repeat
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const double* src = g.data() + i * C;
            double* d = dst.data() + static_cast<std::size_t>(idx[i]) * C;
            for (int c = 0; c < C; ++c) d[c] += src[c];
        }
    };
    return push(std::move(out), requires_grad(x), std::move(back), "gather_rows");
}

Var Tape::weighted_sum_rows(Var w, Tensor vals) {
    const Tensor& vw = value(w);
    require(vw.rank() == 2 && vals.rank() == 3, "weighted_sum_rows: need w(N,K) vals(N,K,C)");
    const int N = vw.dim(0), K = vw.dim(1), C = vals.dim(2);
    require(vals.dim(0) == N && vals.dim(1) == K, "weighted_sum_rows: shape mismatch");
    Tensor out({N, C});
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < K; ++k) {
            const double wv = vw.at2(i, k);
            for (int c = 0; c < C; ++c) out.at2(i, c) += wv * vals.at3(i, k, c);
        }
    const int outId = static_cast<int>(values_.size());
    auto back = [this, iw = w.id, vals = std::move(vals), outId, N, K, C] {
        if (!reqGrad_[static_cast<std::size_t>(iw)]) return;
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        Tensor dw({N, K});
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < K; ++k) {
                double acc = 0.0;
                for (int c = 0; c < C; ++c) acc += g.at2(i, c) * vals.at3(i, k, c);
                dw.at2(i, k) = acc;
            }
        accumulate(iw, dw);
    };
    return push(std::move(out), requires_grad(w), std::move(back), "weighted_sum_rows");
}

Var Tape::convex_blend(Var conf, const std::vector<Var>& xs) {
    const Tensor& vc = value(conf);
    require(vc.rank() == 2, "convex_blend: conf must be (N,M)");
    const int N = vc.dim(0), M = vc.dim(1);
    require(static_cast<int>(xs.size()) == M, "convex_blend: source count != M");
    const int C = value(xs[0]).dim(1);
    bool rg = requires_grad(conf);
    for (Var v : xs) {
        const Tensor& t = value(v);
        require(t.rank() == 2 && t.dim(0) == N && t.dim(1) == C, "convex_blend: source shape mismatch");
        rg = rg || requires_grad(v);
    }
    Tensor out({N, C});
    for (int m = 0; m < M; ++m) {
        const Tensor& src = value(xs[static_cast<std::size_t>(m)]);
        for (int i = 0; i < N; ++i) {
            const double cv = vc.at2(i, m);
            for (int c = 0; c < C; ++c) out.at2(i, c) += cv * src.at2(i, c);
        }
    }
    std::vector<int> ids;
    for (Var v : xs) ids.push_back(v.id);
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ic = conf.id, ids, outId, N, M, C] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        const Tensor& vc = values_[static_cast<std::size_t>(ic)];
        if (reqGrad_[static_cast<std::size_t>(ic)]) {
            Tensor dc({N, M});
            for (int m = 0; m < M; ++m) {
                const Tensor& src = values_[static_cast<std::size_t>(ids[static_cast<std::size_t>(m)])];
                for (int i = 0; i < N; ++i) {
                    double acc = 0.0;
                    for (int c = 0; c < C; ++c) acc += g.at2(i, c) * src.at2(i, c);
                    dc.at2(i, m) = acc;
                }
            }
            accumulate(ic, dc);
        }
        for (int m = 0; m < M; ++m) {
            const int id = ids[static_cast<std::size_t>(m)];
            if (!reqGrad_[static_cast<std::size_t>(id)]) continue;
            Tensor dx({N, C});
            for (int i = 0; i < N; ++i) {
                const double cv = vc.at2(i, m);
                for (int c = 0; c < C; ++c) dx.at2(i, c) = cv * g.at2(i, c);
            }
            accumulate(id, dx);
        }
    };
    return push(std::move(out), rg, std::move(back), "convex_blend");
}

Var Tape::epi_shift_diff(Var a, Var b, Tensor d) {
    const Tensor &va = value(a), &vb = value(b);
    require(va.rank() == 3 && va.same_shape(vb), "epi_shift_diff: need matching (C,H,W)");
    const int C = va.dim(0), H = va.dim(1), W = va.dim(2);
    require(d.rank() == 2 && d.dim(0) == H && d.dim(1) == W, "epi_shift_diff: d must be (H,W)");

    Tensor out({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y) {
            const double* arow = va.data() + (static_cast<std::size_t>(c) * H + y) * W;
            const double* brow = vb.data() + (static_cast<std::size_t>(c) * H + y) * W;
            double* orow = out.data() + (static_cast<std::size_t>(c) * H + y) * W;
            for (int x = 0; x < W; ++x) {
                const double xs = x + d.at2(y, x);
                const int i0 = static_cast<int>(std::floor(xs));
                const double f = xs - i0;
                const int i0c = std::clamp(i0, 0, W - 1);
                const int i1c = std::clamp(i0 + 1, 0, W - 1);
                orow[x] = (1.0 - f) * arow[i0c] + f * arow[i1c] - brow[x];
            }
        }
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ia = a.id, ib = b.id, d = std::move(d), outId, C, H, W] {
        const Tensor& g = grads_[static_cast<std::size_t>(outId)];
        if (reqGrad_[static_cast<std::size_t>(ia)]) {
            Tensor& da = grad_buf(ia);
            for (int c = 0; c < C; ++c)
                for (int y = 0; y < H; ++y) {
                    double* drow = da.data() + (static_cast<std::size_t>(c) * H + y) * W;
                    const double* grow = g.data() + (static_cast<std::size_t>(c) * H + y) * W;
                    for (int x = 0; x < W; ++x) {
                        const double xs = x + d.at2(y, x);
                        const int i0 = static_cast<int>(std::floor(xs));
                        const double f = xs - i0;
                        drow[std::clamp(i0, 0, W - 1)] += (1.0 - f) * grow[x];
                        drow[std::clamp(i0 + 1, 0, W - 1)] += f * grow[x];
                    }
                }
        }
        if (reqGrad_[static_cast<std::size_t>(ib)]) {
            Tensor db(g.shape());
            for (std::size_t i = 0; i < g.size(); ++i) db[i] = -g[i];
            accumulate(ib, db);
        }
    };
    return push(std::move(out), requires_grad(a) || requires_grad(b), std::move(back),
                "epi_shift_diff");
}

Var Tape::sum_all(Var x) {
    const Tensor& vx = value(x);
    double s = 0.0;
    for (std::size_t i = 0; i < vx.size(); ++i) s += vx[i];
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ix = x.id, outId] {
        if (!reqGrad_[static_cast<std::size_t>(ix)]) return;
        const double g0 = grads_[static_cast<std::size_t>(outId)][0];
        Tensor& dst = grad_buf(ix);
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g0;
    };
    return push(Tensor::scalar(s), requires_grad(x), std::move(back), "sum_all");
}

Var Tape::mean_abs_diff(Var a, Tensor b) {
    const Tensor& va = value(a);
    require(va.same_shape(b), "mean_abs_diff: " + va.shape_str() + " vs " + b.shape_str());
    const double n = static_cast<double>(va.size());
    double s = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) s += std::abs(va[i] - b[i]);
    const int outId = static_cast<int>(values_.size());
    auto back = [this, ia = a.id, b = std::move(b), outId, n] {
        if (!reqGrad_[static_cast<std::size_t>(ia)]) return;
        const double coef = grads_[static_cast<std::size_t>(outId)][0] / n;
        const Tensor& va = values_[static_cast<std::size_t>(ia)];
        Tensor& dst = grad_buf(ia);
        for (std::size_t i = 0; i < dst.size(); ++i) {
            const double diff = va[i] - b[i];
            dst[i] += diff > 0.0 ? coef : (diff < 0.0 ? -coef : 0.0);
        }
    };
    return push(Tensor::scalar(s / n), requires_grad(a), std::move(back), "mean_abs_diff");
}

}  // namespace lf::ad
