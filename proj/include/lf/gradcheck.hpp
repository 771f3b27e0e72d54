#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lf/tape.hpp"
#include "lf/tensor.hpp"

namespace lf {

// A differentiable scalar function of some tensors, checked against central
// finite differences. build() registers one Var per init tensor (in order)
// when vars is non-null; an invalid Var marks a tensor the graph never uses.
struct CheckSpec {
    std::string name;
    double tol = 1e-6;
    double h = 1e-5;
    std::vector<Tensor> init;
    std::function<ad::Var(ad::Tape&, const std::vector<Tensor>&, std::vector<ad::Var>*)> build;
};

struct CheckResult {
    std::string name;
    double tol = 0;
    double maxRel = 0;
    std::size_t evals = 0;
    double seconds = 0;
    bool pass = false;
    // worst element, for diagnostics
    std::size_t worstTensor = 0;
    std::size_t worstElem = 0;
    double worstAnalytic = 0;
    double worstFd = 0;
    std::size_t failCount = 0;
};

// Compares every element's analytic gradient with (L(p+h) - L(p-h)) / 2h,
// relative error denominator max(|analytic|, |fd|, 1e-8).
CheckResult run_check(const CheckSpec& spec);

// One spec per differentiable tape op.
std::vector<CheckSpec> op_checks();

// Full training-step loss on a tiny scene, differentiated w.r.t. every
// model parameter.
CheckSpec composed_check();

}  // namespace lf
