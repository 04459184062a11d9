#pragma once

#include "csvl/errors.hpp"
#include "csvl/spectral_torus.hpp"

namespace csvl {

/// The change of variables u = F(v) = 1 + v - e^v restricted to the branch
/// v <= 0, u <= 0, where F is strictly increasing, and the nonlinearity of
/// the substituted equation with its cancelled closed-form derivative.
///
/// The letter G is taken by the Green function here, so the inverse map
/// is called F_inverse throughout.
struct HiggsBranch {
    double tolerance = 1e-14;
    int max_iter = 100;
};

// u = 1 + v - e^v for v <= 0.
double F(double v);

// The inverse branch: v <= 0 with F(v) = u, for u <= 0.
// Safeguarded Newton; seed v0 = u - 1 for u <= -2, v0 = -sqrt(-2u) near 0.
double F_inverse(double u, const HiggsBranch& branch = {});

// N_eps(u) = eps^-2 e^V (1 - e^V)^2 with V = F_inverse(u).
double nonlinearity(double u, double eps, const HiggsBranch& branch = {});

// dN_eps/du = eps^-2 e^V (1 - 3 e^V); the 1/(1 - e^V) factor from the chain
// rule cancels, so this stays bounded up to u = 0.
double nonlinearity_derivative(double u, double eps, const HiggsBranch& branch = {});

// Field-wise application of F_inverse.
Field F_inverse_field(const Field& u, const HiggsBranch& branch = {});

} // namespace csvl
