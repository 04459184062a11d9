#pragma once

#include <functional>
#include <vector>

namespace csvl {

using VecFn = std::function<std::vector<double>(const std::vector<double>&)>;

struct KrylovOptions {
    int max_iter = 600;
    int restart = 60;
    double tol = 1e-10; // relative to |b|
};

struct KrylovResult {
    int iterations = 0;
    double residual = 0.0; // final relative residual
    bool converged = false;
};

// Restarted GMRES for A x = b with an optional right preconditioner M
// (an approximation of A^{-1}). x carries the initial guess on entry and
// the solution on exit; the reported residual is the true one.
KrylovResult gmres(const VecFn& apply, const std::vector<double>& b, std::vector<double>& x,
                   const KrylovOptions& opts = {}, const VecFn& precond = {});

} // namespace csvl
