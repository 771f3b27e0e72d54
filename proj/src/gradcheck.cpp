#include "lf/gradcheck.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "lf/config.hpp"
#include "lf/nn.hpp"
#include "lf/oracle.hpp"
#include "lf/rng.hpp"
#include "lf/train.hpp"

namespace lf {

namespace {

Tensor rand_tensor(Rng& rng, const std::vector<int>& shape, double scale = 1.0) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
}

// Values with |v| >= margin, so piecewise-linear kinks stay out of the
// finite-difference window.
Tensor rand_away_zero(Rng& rng, const std::vector<int>& shape, double margin) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) {
        double v = rng.normal();
        double s = v < 0.0 ? -1.0 : 1.0;
        t[i] = s * (margin + std::fabs(v));
    }
    return t;
}

double eval_loss(const CheckSpec& spec, const std::vector<Tensor>& inputs) {
    ad::Tape tape(false);
    ad::Var loss = spec.build(tape, inputs, nullptr);
    const Tensor& v = tape.value(loss);
    if (v.size() != 1) throw std::runtime_error("gradcheck: loss is not scalar");
    return v[0];
}

// Reduces a non-scalar op output to a scalar with a fixed random
// cotangent, so every output element contributes to the gradient.
ad::Var project(ad::Tape& tape, ad::Var out, const Tensor& coef) {
    return tape.sum_all(tape.mul(out, tape.leaf(coef)));
}

}  // namespace

CheckResult run_check(const CheckSpec& spec) {
    auto t0 = std::chrono::steady_clock::now();
    CheckResult res;
    res.name = spec.name;
    res.tol = spec.tol;

    ad::Tape tape(true);
    std::vector<ad::Var> vars;
    ad::Var loss = spec.build(tape, spec.init, &vars);
    if (vars.size() != spec.init.size())
        throw std::runtime_error("gradcheck: build registered wrong var count");
    tape.backward(loss);

    std::vector<Tensor> work = spec.init;
    for (std::size_t ti = 0; ti < work.size(); ++ti) {
        const Tensor* g = vars[ti].valid() ? tape.grad_ptr(vars[ti]) : nullptr;
        for (std::size_t e = 0; e < work[ti].size(); ++e) {
            const double orig = work[ti][e];
            auto fd_at = [&](double h) {
                work[ti][e] = orig + h;
                double lp = eval_loss(spec, work);
                work[ti][e] = orig - h;
                double lm = eval_loss(spec, work);
                work[ti][e] = orig;
                res.evals += 2;
                return (lp - lm) / (2.0 * h);
            };
            const double an = g ? (*g)[e] : 0.0;
            auto rel_of = [&](double fd) {
                double denom = std::max(std::max(std::fabs(an), std::fabs(fd)), 1e-8);
                return std::fabs(an - fd) / denom;
            };

            double fd = fd_at(spec.h);
            double rel = rel_of(fd);
            // A difference across one of the piecewise-linear kinks (L1,
            // leaky relu) says nothing about the derivative; retry such
            // elements with a narrower interval. Near-zero gradients fail
            // the other way round, with the difference drowned in rounding
            // noise, so also retry with wider intervals (noise scales with
            // 1/h, curvature along a near-dead coordinate is negligible).
            static constexpr double ladder[] = {0.25, 1.0 / 16, 4.0, 16.0, 64.0};
            for (double m : ladder) {
                if (rel < spec.tol) break;
                fd = fd_at(m * spec.h);
                rel = rel_of(fd);
            }
            if (rel >= spec.tol) ++res.failCount;
            if (rel > res.maxRel) {
                res.maxRel = rel;
                res.worstTensor = ti;
                res.worstElem = e;
                res.worstAnalytic = an;
                res.worstFd = fd;
            }
        }
    }

    res.pass = res.maxRel < spec.tol;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::vector<CheckSpec> op_checks() {
    std::vector<CheckSpec> specs;

    auto leaf_all = [](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
        std::vector<ad::Var> xs;
        for (const Tensor& tt : in) xs.push_back(t.leaf(tt, true));
        if (vars) *vars = xs;
        return xs;
    };

    {
        CheckSpec s;
        s.name = "add";
        Rng r(101);
        s.init = {rand_tensor(r, {3, 4}), rand_tensor(r, {3, 4})};
        Tensor coef = rand_tensor(r, {3, 4});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.add(xs[0], xs[1]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "sub";
        Rng r(102);
        s.init = {rand_tensor(r, {3, 4}), rand_tensor(r, {3, 4})};
        Tensor coef = rand_tensor(r, {3, 4});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.sub(xs[0], xs[1]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "mul";
        Rng r(103);
        s.init = {rand_tensor(r, {3, 4}), rand_tensor(r, {3, 4})};
        Tensor coef = rand_tensor(r, {3, 4});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.mul(xs[0], xs[1]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "scale";
        Rng r(104);
        s.init = {rand_tensor(r, {2, 5})};
        Tensor coef = rand_tensor(r, {2, 5});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.scale(xs[0], -0.731), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "leaky_relu";
        Rng r(105);
        s.init = {rand_away_zero(r, {4, 6}, 0.05)};
        Tensor coef = rand_tensor(r, {4, 6});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.leaky_relu(xs[0]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "affine";
        Rng r(106);
        s.init = {rand_tensor(r, {4, 3}), rand_tensor(r, {3, 5}), rand_tensor(r, {5})};
        Tensor coef = rand_tensor(r, {4, 5});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.affine(xs[0], xs[1], xs[2]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "affine_lrelu";
        Rng r(107);
        s.init = {rand_tensor(r, {4, 3}), rand_tensor(r, {3, 5}), rand_away_zero(r, {5}, 0.3)};
        Tensor coef = rand_tensor(r, {4, 5});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.affine(xs[0], xs[1], xs[2], true), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "conv3x3";
        Rng r(108);
        s.init = {rand_tensor(r, {2, 5, 6}), rand_tensor(r, {3, 2, 3, 3}, 0.5), rand_tensor(r, {3})};
        Tensor coef = rand_tensor(r, {3, 5, 6});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.conv3x3(xs[0], xs[1], xs[2]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "conv3x3_lrelu";
        Rng r(109);
        s.init = {rand_tensor(r, {2, 5, 6}), rand_tensor(r, {3, 2, 3, 3}, 0.5), rand_away_zero(r, {3}, 0.3)};
        Tensor coef = rand_tensor(r, {3, 5, 6});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.conv3x3(xs[0], xs[1], xs[2], true), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "softmax_lastdim";
        Rng r(110);
        s.init = {rand_tensor(r, {4, 5})};
        Tensor coef = rand_tensor(r, {4, 5});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.softmax_lastdim(xs[0]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "concat_axis0";
        Rng r(111);
        s.init = {rand_tensor(r, {2, 3}), rand_tensor(r, {1, 3}), rand_tensor(r, {3, 3})};
        Tensor coef = rand_tensor(r, {6, 3});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.concat(xs, 0), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "concat_axis1";
        Rng r(112);
        s.init = {rand_tensor(r, {2, 3}), rand_tensor(r, {2, 2}), rand_tensor(r, {2, 4})};
        Tensor coef = rand_tensor(r, {2, 9});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.concat(xs, 1), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "reshape";
        Rng r(113);
        s.init = {rand_tensor(r, {2, 6})};
        Tensor coef = rand_tensor(r, {3, 4});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.reshape(xs[0], {3, 4}), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "rows_from_chw";
        Rng r(114);
        s.init = {rand_tensor(r, {3, 2, 4})};
        Tensor coef = rand_tensor(r, {8, 3});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.rows_from_chw(xs[0]), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "chw_from_rows";
        Rng r(115);
        s.init = {rand_tensor(r, {8, 3})};
        Tensor coef = rand_tensor(r, {3, 2, 4});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.chw_from_rows(xs[0], 2, 4), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "gather_rows";
        Rng r(116);
        s.init = {rand_tensor(r, {5, 3})};
        // Repeated indices exercise gradient accumulation in the scatter.
        std::vector<int> idx = {0, 2, 2, 4, 1, 0, 2};
        Tensor coef = rand_tensor(r, {7, 3});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.gather_rows(xs[0], idx), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "weighted_sum_rows";
        Rng r(117);
        s.init = {rand_tensor(r, {4, 3})};
        Tensor vals = rand_tensor(r, {4, 3, 2});
        Tensor coef = rand_tensor(r, {4, 2});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.weighted_sum_rows(xs[0], vals), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "convex_blend";
        Rng r(118);
        s.init = {rand_tensor(r, {4, 2}), rand_tensor(r, {4, 3}), rand_tensor(r, {4, 3})};
        Tensor coef = rand_tensor(r, {4, 3});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            ad::Var conf = t.softmax_lastdim(xs[0]);
            return project(t, t.convex_blend(conf, {xs[1], xs[2]}), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "epi_shift_diff";
        Rng r(119);
        s.init = {rand_tensor(r, {2, 3, 8}), rand_tensor(r, {2, 3, 8})};
        Tensor d({3, 8});
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = -2.0 + 4.0 * r.uniform() + 0.3;
        Tensor coef = rand_tensor(r, {2, 3, 8});
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return project(t, t.epi_shift_diff(xs[0], xs[1], d), coef);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "sum_all";
        Rng r(120);
        s.init = {rand_tensor(r, {3, 4})};
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return t.sum_all(xs[0]);
        };
        specs.push_back(s);
    }
    {
        CheckSpec s;
        s.name = "mean_abs_diff";
        Rng r(121);
        s.init = {rand_tensor(r, {3, 4})};
        Tensor ref = s.init[0];
        Tensor delta = rand_away_zero(r, {3, 4}, 0.02);
        for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += delta[i];
        s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
            auto xs = leaf_all(t, in, vars);
            return t.mean_abs_diff(xs[0], ref);
        };
        specs.push_back(s);
    }

    return specs;
}

CheckSpec composed_check() {
    // Tiny end-to-end training step: 3 views on a 10x10 two-layer scene,
    // synthesize the middle view from the outer pair and differentiate the
    // full loss w.r.t. every model parameter.
    PipelineConfig cfg;
    cfg.dmax = 1.4;
    cfg.channels = 1;
    cfg.featureDim = 8;
    cfg.fwHidden = 32;
    cfg.fbHidden = 32;
    cfg.frChannels = 8;
    cfg.patchSize = 4;
    cfg.stride = 4;
    cfg.lambda = 0.1;
    cfg.seed = 5;
    cfg.sources = {0, 2};
    cfg.disparitySource = DisparitySource::gt;

    std::vector<LayerSpec> layers;
    layers.push_back(LayerSpec{1.0, {{3, 7}}});
    layers.push_back(LayerSpec{-0.5, {}});
    SceneOracle sc = gen_scene(4242, 3, 10, 10, layers, cfg.dmax);

    auto scene = std::make_shared<SceneData>(prepare_scene(sc.renders, sc.gtDisparity, cfg, 0));
    ArchConfig arch = make_arch(cfg, 3);

    ModelParams proto = init_model(arch, 99, /*randomizeResidual=*/true);
    std::vector<std::string> names = proto.names();

    CheckSpec s;
    s.name = "composed_step_loss";
    s.tol = 1e-4;
    s.h = 1e-5;
    for (const std::string& n : names) s.init.push_back(proto.get(n));

    const int ox = 2, oy = 3;
    s.build = [=](ad::Tape& t, const std::vector<Tensor>& in, std::vector<ad::Var>* vars) {
        ModelParams params;
        for (std::size_t i = 0; i < names.size(); ++i) params.add(names[i], in[i]);
        ParamVars pv(t, params, /*trainable=*/true);
        StepLossVars sl = build_step_loss(t, pv, *scene, ox, oy, cfg, arch);
        if (vars) {
            for (const std::string& n : names) {
                const ad::Var* v = pv.find(n);
                vars->push_back(v ? *v : ad::Var{});
            }
        }
        return sl.total;
    };
    return s;
}

}  // namespace lf
