#pragma once

#include <array>
#include <string>
#include <vector>

#include "csvl/ansatz.hpp"
#include "csvl/green.hpp"
#include "csvl/spectral_torus.hpp"

namespace csvl {

// Sum of the truncated bubble weights, Σ 1_{B_{d_i}} e^{u_i}; the potential
// of the approximate linearized operator L = Δ + h_μ.
double h_mu(const BubbleParams& p, const TorusDomain& dom, Vec2 y);

// Approximate kernels of L: the radial dilation mode
//   Y_0(y) = −1/μ_1 + Σ_i χ_i(r_i) (2/μ_1) / (1 + μ_i² r_i²)
// and the 2k translation modes
//   Y_{ij}(y) = χ_i(r_i) μ_i² (y − x_i)_j / (1 + μ_i² r_i²),
// with χ_i a quintic smoothstep cutoff, 1 in B_{d_i}, 0 outside B_{2d_i}.
double kernel_Y0(const BubbleParams& p, const TorusDomain& dom, Vec2 y);
double kernel_Yij(const BubbleParams& p, const TorusDomain& dom, int i, int j, Vec2 y);

// Analytic (Δ + h_μ)Y: identically zero inside the balls (the kernels are
// exact there) and supported in the cutoff annuli d_i < r < 2d_i.
double kernel_residual_Y0(const BubbleParams& p, const TorusDomain& dom, Vec2 y);
double kernel_residual_Yij(const BubbleParams& p, const TorusDomain& dom, int i, int j, Vec2 y);

// Sup of |(Δ + h_μ)Y| over the annuli by dense radial sampling; decays
// like μ^{-3} for Y_0 and stays O(1) for the Y_{ij}.
double kernel_residual_sup_Y0(const BubbleParams& p, const TorusDomain& dom);
double kernel_residual_sup_Yij(const BubbleParams& p, const TorusDomain& dom, int i, int j);

/// Grid samples of the 2k+1 kernels Y and their images Z = −ΔY + h_μ Y
/// (spectral Laplacian). Flattened index: 0 is the dilation mode, then
/// 1 + 2i + j for bubble i, component j.
struct KernelSet {
    BubbleParams params;
    std::vector<Field> Y;
    std::vector<Field> Z;
    Field h;

    int count() const { return static_cast<int>(Y.size()); }
};

KernelSet build_kernels(const BubbleParams& p, const TorusDomain& grid);

/// Weight profiles of the rescaled norms: ρ(y) = (1+|y|)^{1+α/2} and
/// ρ̂(y) = 1/((1+|y|) ln(2+|y|)^{1+α/2}), applied to the per-bubble
/// rescaled samples ξ̃_i(y) = ξ(x_i + y/μ_i) on B_{2 d_i μ_i}, plus the
/// plain L² term on the complement Ω ∖ ∪B_{2d_i}.
struct WeightedNorms {
    double alpha = 0.4;
    int n_theta = 128;
    int levels = 24;
};

double rho_weight(double r, double alpha);
double rho_hat_weight(double r, double alpha);

// ‖f‖²_Y = Σ_i μ_i^{-4} ‖f̃_i ρ‖²_{L²(B_{2d_iμ_i})} + ‖f‖²_{L²(Ω∖Ω′)}.
// ‖f‖²_X = Σ_i (‖Δf̃_i ρ‖² + ‖f̃_i ρ̂‖²) + ‖f‖²_{L²(Ω∖Ω′)}.
// The function overloads evaluate integrands exactly (grid-free); the
// Field overloads sample by bicubic interpolation (lap_f: spectral
// Laplacian of f, needed for the X norm only).
double weighted_norm_Y(const std::function<double(Vec2)>& f, const BubbleParams& p,
                       const TorusDomain& dom, const WeightedNorms& w = {});
double weighted_norm_Y(const Field& f, const BubbleParams& p, const WeightedNorms& w = {});
double weighted_norm_X(const std::function<double(Vec2)>& f,
                       const std::function<double(Vec2)>& lap_f, const BubbleParams& p,
                       const TorusDomain& dom, const WeightedNorms& w = {});
double weighted_norm_X(const Field& f, const BubbleParams& p, const WeightedNorms& w = {});

/// Result of the projection Q f = f − c₀ Z₀ − Σ c_{ij} Z_{ij} enforcing
/// ⟨Y_a, Q f⟩ = 0 for all 2k+1 kernels.
struct Projection {
    Field field;
    std::vector<double> c; // kernel coefficients, flattened as in KernelSet
};

Projection project_Q(const Field& f, const KernelSet& ks);

/// The 2k+1 projected residuals ⟨Y_a, R⟩ of an equation-residual field.
struct ReducedResiduals {
    double R0 = 0.0;
    std::vector<double> Rij;
};

ReducedResiduals projected_residuals(const Field& residual, const KernelSet& ks);

// Equation residual of the candidate u = u₀ + W̃ + η on the grid:
//   R = ΔW̃ (analytic) + Δη (spectral) + N_ε(u) − 8kπ/|Ω|.
Field equation_residual(const AnsatzField& a, const Field& eta, double eps);

/// Inner correction solve: η ⊥ {Y_a} with
///   ΔW̃ + Δη + N_ε(u₀+W̃+η) − 8kπ/|Ω| = Σ_a c_a Z_a,
/// a bordered Newton–Krylov iteration in (η, c).
struct InnerOptions {
    double newton_tol = 1e-10; // on the residual sup norm / 8kπ
    int max_newton = 40;
    int gmres_restart = 60;
    int gmres_max_iter = 2000;
    double gmres_tol = 1e-8;
};

struct InnerSolution {
    Field eta;
    std::vector<double> c;
    int newton_iterations = 0;
    double residual_sup = 0.0; // of the bordered equation, not projected
    bool clipped = false;      // branch guard active at the final iterate
    std::string trace_csv;
};

InnerSolution solve_inner(const AnsatzField& a, const KernelSet& ks, double eps,
                          const InnerOptions& opts = {}, const Field* eta0 = nullptr);

/// Reduced solve at a (symmetric) critical configuration q: find μ in the
/// window (β₀/√ε, β₁/√ε) with vanishing normalized dilation residual
/// R₀(μ)/(‖Y₀‖‖R‖). The window widens up to max_widen times before
/// reduced_infeasible_error; flip_d_term negates the fitted μ^{-3} part of
/// R₀(μ) (the D(q) term), the negative test that must turn infeasible.
struct ReducedOptions {
    int grid_n = 128;
    double d = 0.0; // cutoff base passed to make_bubble_params
    double beta0 = 0.2;
    double beta1 = 5.0;
    double tol_reduced = 1e-8;
    int max_widen = 2;
    int bracket_samples = 7;
    int bisect_iters = 60;
    bool flip_d_term = false;
    InnerOptions inner;
};

struct ReducedSolution {
    BubbleParams params; // with the solved mu
    Field eta;
    double mu = 0.0;
    double R0_normalized = 0.0;
    std::vector<double> Rij_normalized;
    double grad_g_star_norm = 0.0;
    double fitted_mu3_coef = 0.0; // a in R0 ≈ a/μ³ + b ε² μ
    double fitted_eps2mu_coef = 0.0;
    std::string trace_csv; // columns mu,R0norm
};

ReducedSolution solve_reduced(const GreenEvaluator& g, const VortexConfig& cfg,
                              const std::vector<Vec2>& q, double eps,
                              const ReducedOptions& opts = {});

} // namespace csvl
