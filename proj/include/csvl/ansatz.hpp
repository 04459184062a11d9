#pragma once

#include <vector>

#include "csvl/green.hpp"
#include "csvl/spectral_torus.hpp"

namespace csvl {

/// Bubble configuration: centers x_i, master scale mu, squared-length
/// cutoff base d with per-bubble radii d_i^2 = d - 1/mu_i^2, and the
/// interaction weights rho_i fixing mu_i = sqrt(rho_1/rho_i) mu.
struct BubbleParams {
    std::vector<Vec2> centers;
    double mu = 0.0;
    double d = 0.0;   // note: a squared length
    double eps = 0.0;
    double beta0 = 0.2;
    double beta1 = 5.0;

    std::vector<double> rho;
    std::vector<double> mu_i;
    std::vector<double> d_i;

    int k() const { return static_cast<int>(centers.size()); }
    bool mu_in_window() const;
};

// Default cutoff base: with delta the minimal pairwise torus distance
// among centers and vortex points, d = (delta/5)^2 + 1/mu^2, so each d_i
// is near delta/5 (doubled balls disjoint, clear of the vortices) and
// d_i^2 = d - 1/mu_i^2 stays positive even at small mu.
double default_cutoff_base(const TorusDomain& dom, const VortexConfig& cfg,
                           const std::vector<Vec2>& centers, double mu);

// Validates the configuration and fills the derived quantities. d <= 0
// selects the default above. The mu-window [beta0/sqrt(eps), beta1/sqrt(eps)]
// is recorded (mu_in_window), not enforced, so out-of-window probes can
// still reach the matching-constant feasibility check.
BubbleParams make_bubble_params(const GreenEvaluator& g, const VortexConfig& cfg,
                                std::vector<Vec2> centers, double mu, double eps,
                                double d = 0.0);

// Planar Liouville profile ln 8 mu_i^2 / (1 + mu_i^2 |y - x_i|^2)^2 with
// the nearest-image torus distance.
double bubble(const TorusDomain& dom, Vec2 x_i, double mu_i, Vec2 y);

// rho_i = exp(8 pi gamma(x_i,x_i) + 8 pi sum_{j != i} G(x_j,x_i) + u0(x_i)).
std::vector<double> rho_weights(const VortexConfig& cfg, const GreenEvaluator& g,
                                const std::vector<Vec2>& centers);

// One matched piecewise profile w*_i: inside B_{d_i} the bubble plus
// 8 pi gamma(y,x_i)(1 - 1/(d mu_i^2)); outside, the bubble's boundary
// value plus 8 pi (G(y,x_i) + ln(d_i)/(2 pi)) (1 - 1/(d mu_i^2)). The two
// branches match in value and first derivative at |y - x_i| = d_i.
double w_star_term(const BubbleParams& p, const GreenEvaluator& g, int i, Vec2 y);

// w*(y) = sum_i w*_i(y).
double w_star(const BubbleParams& p, const GreenEvaluator& g, Vec2 y);

// Distributional Laplacian of w* away from the centers' log poles:
// -sum_i e^{u_i} 1_{B_{d_i}} + sum_i 8 pi (1 - 1/(d mu_i^2)) / |Omega|.
// Exact because the matching is C^1 (no surface layer on the circles).
double lap_w_star(const BubbleParams& p, const TorusDomain& dom, Vec2 y);

/// Cell-quadrature integrals feeding the matching constant: the mean of
/// w*, and the masses of e^{u0 + w} and e^{2(u0 + w)} for the
/// mean-removed profile w = w* - mean(w*).
struct AnsatzIntegrals {
    double mean_w_star = 0.0;
    double mass1 = 0.0;
    double mass2 = 0.0;
};

AnsatzIntegrals ansatz_integrals(const BubbleParams& p, const GreenEvaluator& g,
                                 const VortexConfig& cfg, int n_theta = 256);

// c = ln[ 16 k pi eps^2 / (mass1 (1 + sqrt(1 - 32 k pi eps^2 mass2 / mass1^2))) ].
// Negative discriminant -> ansatz_infeasible_error.
double c_from_integrals(const AnsatzIntegrals& I, int k, double eps);
double c_of_w(const BubbleParams& p, const GreenEvaluator& g, const VortexConfig& cfg);

// Local mass of e^{u0 + w*} over B_{d_i}(x_i).
double bubble_mass(const BubbleParams& p, const GreenEvaluator& g, const VortexConfig& cfg,
                   int i, int n_theta = 128);

/// The assembled correction W-tilde = w* - mean(w*) + c on a grid, with
/// its analytic Laplacian and the per-bubble component fields.
struct AnsatzField {
    BubbleParams params;
    Field W_tilde;
    Field lap_W_tilde;          // analytic, not spectral (w* is only C^1)
    Field u0;                   // on the same grid
    std::vector<Field> components;
    double c_value = 0.0;
    double mean_w_star = 0.0;
    double mass1 = 0.0;
    double mass2 = 0.0;
};

AnsatzField build_ansatz(const BubbleParams& p, const GreenEvaluator& g, const VortexConfig& cfg,
                         const TorusDomain& grid);

// u = 1 + u0 + W_tilde + eta; verifies u <= 0 (clipping only roundoff-level
// overshoots), else out_of_branch_error.
Field candidate_u(const AnsatzField& a, const Field& eta);
Field candidate_u(const AnsatzField& a);

} // namespace csvl
