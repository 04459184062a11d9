#pragma once

#include <array>
#include <vector>

#include "csvl/errors.hpp"
#include "csvl/spectral_torus.hpp"

namespace csvl {

/// Vortex points p_j with multiplicities; N counts with multiplicity and
/// the bubbling construction needs N = 2k.
struct VortexConfig {
    std::vector<Vec2> points;
    std::vector<int> multiplicities;
    int N = 0;
    int k = 0;
};

VortexConfig make_vortex_config(const TorusDomain& dom, std::vector<Vec2> points,
                                std::vector<int> multiplicities = {});

using Mat2 = std::array<std::array<double, 2>, 2>;

/// Doubly periodic Green function of -Laplace with neutralizing background,
///   -Δ_x G(x,y) = δ_y - 1/|Ω|,   ∫_Ω G(·,y) = 0,
/// evaluated by Ewald splitting: a short-range lattice-image sum of
/// exponential-integral terms plus a Gaussian-damped Fourier tail.
/// gamma(x,y) = G(x,y) + (1/2π) ln|x-y| is the regular part.
class GreenEvaluator {
  public:
    // ewald_split is the Gaussian width sigma; <= 0 selects the default
    // 0.12 * min(L1, L2). Cutoffs are sized so that doubling them moves
    // values by well under 1e-11.
    explicit GreenEvaluator(const TorusDomain& dom, double ewald_split = 0.0,
                            int fourier_cutoff = 0, int real_cutoff = 0);

    const TorusDomain& domain() const { return dom_; }
    double ewald_split() const { return sigma_; }
    int fourier_cutoff() const { return fourier_cutoff_; }
    int real_cutoff() const { return real_cutoff_; }

    double green(Vec2 x, Vec2 y) const;
    double gamma(Vec2 x, Vec2 y) const;
    // Diagonal value gamma(y,y); constant in y by translation invariance.
    double gamma_diag() const;

    Vec2 grad_green(Vec2 x, Vec2 y) const;  // gradient in x
    Vec2 grad_gamma(Vec2 x, Vec2 y) const;
    Mat2 hess_green(Vec2 x, Vec2 y) const;  // Hessian in x
    Mat2 hess_gamma(Vec2 x, Vec2 y) const;

    // u0(x) = -4π Σ_j m_j G(x, p_j).
    double u0(const VortexConfig& cfg, Vec2 x) const;
    Vec2 grad_u0(const VortexConfig& cfg, Vec2 x) const;
    Mat2 hess_u0(const VortexConfig& cfg, Vec2 x) const;
    Field u0_field(const VortexConfig& cfg, const TorusDomain& grid) const;

    // Quadrature mean over x of G(x,y) on an n-by-n grid, computed through
    // a smooth desingularization so the log pole does not limit accuracy.
    double mean_of_column(Vec2 y, int n = 256) const;

  private:
    struct Eval {
        double value;
        Vec2 grad;
        Mat2 hess;
    };
    Eval evaluate(Vec2 r, bool regularized, bool want_derivs) const;

    TorusDomain dom_;
    double sigma_;
    int fourier_cutoff_;
    int real_cutoff_;
    double a_;                 // 4 sigma^2
    double background_;        // additive constant enforcing zero mean
    std::vector<Vec2> images_; // lattice shifts for the short-range sum
    // Fourier tail: value = Σ coef cos(kx x + ky y) over m1 in [0, M],
    // m2 in [-M, M] with weights folded for the half-plane symmetry.
    std::vector<double> kx_, ky_, coef_;
};

} // namespace csvl
