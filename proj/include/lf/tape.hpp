#pragma once

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "lf/tensor.hpp"

namespace lf::ad {

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode autodiff over Tensors. Every op pushes its result; when the
// tape is recording it also pushes a backward closure. backward(loss) seeds
// d(loss)/d(loss) = 1 and walks the nodes in reverse creation order, so each
// node runs after all its consumers. Gradient buffers are allocated lazily
// and accumulated serially with fixed index order; results are bit-identical
// across thread counts.
class Tape {
public:
    explicit Tape(bool recording = true, bool checkFinite = false)
        : recording_(recording), checkFinite_(checkFinite) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Tensor value, bool requiresGrad = false);

    // Elementwise; shapes must match exactly.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double c);
    Var leaky_relu(Var x, double slope = 0.1);

    // x:(N,I) w:(I,O) b:(O) -> (N,O). fuseLrelu applies leaky_relu(0.1) in
    // place; the activation sign is recovered from the output in backward.
    Var affine(Var x, Var w, Var b, bool fuseLrelu = false);

    // x:(Ci,H,W) k:(Co,Ci,3,3) b:(Co) -> (Co,H,W), zero padding.
    Var conv3x3(Var x, Var k, Var b, bool fuseLrelu = false);

    // Softmax over the last axis, max-subtracted per row.
    Var softmax_lastdim(Var x);

    Var concat(const std::vector<Var>& xs, int axis);
    Var reshape(Var x, std::vector<int> shape);

    Var rows_from_chw(Var x);                // (C,H,W) -> (H*W,C)
    Var chw_from_rows(Var x, int h, int w);  // (N,C) -> (C,h,w)

    // y[i] = x[idx[i]]; backward scatter-adds serially (indices may repeat).
    Var gather_rows(Var x, std::vector<int> idx);

    // y[i][c] = sum_k w[i][k] * vals[i][k][c]; vals is constant.
    Var weighted_sum_rows(Var w, Tensor vals);

    // y[i][c] = sum_m conf[i][m] * xs[m][i][c].
    Var convex_blend(Var conf, const std::vector<Var>& xs);

    // out[c][y][x] = a[c][y] sampled linearly at x + d[y][x] (taps clamped to
    // the row) minus b[c][y][x]. d is constant.
    Var epi_shift_diff(Var a, Var b, Tensor d);

    Var sum_all(Var x);                // -> scalar
    Var mean_abs_diff(Var a, Tensor b);  // mean |a - b| -> scalar; sign(0) = 0

    const Tensor& value(Var v) const { return values_.at(check(v)); }
    bool requires_grad(Var v) const { return reqGrad_.at(check(v)) != 0; }
    bool recording() const { return recording_; }
    std::size_t node_count() const { return values_.size(); }

    // Runs reverse accumulation from a scalar loss. Requires a recording tape.
    void backward(Var loss);

    // Gradient of the last backward() w.r.t. v; null when v was not reached.
    const Tensor* grad_ptr(Var v) const;
    const Tensor& grad(Var v) const;

private:
    struct Node {
        std::function<void()> back;  // empty for leaves and constants
    };

    std::size_t check(Var v) const;
    Var push(Tensor value, bool requiresGrad, std::function<void()> back,
             const char* opName);
    Tensor& grad_buf(int id);
    void accumulate(int id, const Tensor& g);

    bool recording_;
    bool checkFinite_;
    bool ranBackward_ = false;
    std::deque<Tensor> values_;  // deque: references from value() stay valid as nodes are added
    std::vector<char> reqGrad_;
    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

}  // namespace lf::ad
