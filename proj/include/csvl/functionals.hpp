#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csvl/green.hpp"
#include "csvl/quadrature.hpp"
#include "csvl/spectral_torus.hpp"

namespace csvl {

/// Bubble-location configuration q with a partition of the torus into
/// cells around the q_i (Voronoi by default) and the quadrature knobs for
/// the regularized quartic-decay integral.
struct ReducedConfig {
    std::vector<Vec2> q;
    std::vector<StarCell> cells;
    int n_theta = 64;    // ring resolution near the centers
    int n_theta_cell = 192;
    double r0 = 0.0;     // largest inner radius; <= 0 means inradius/2
    int r_levels = 10;   // geometric halvings of the inner radius
};

ReducedConfig make_reduced_config(const GreenEvaluator& g, const VortexConfig& cfg,
                                  std::vector<Vec2> q);

// G*(q) = sum_i u0(q_i) + 8 pi sum_{i != j} G(q_i, q_j)  (ordered pairs).
double g_star(const GreenEvaluator& g, const VortexConfig& cfg, const std::vector<Vec2>& q);

// Gradient as a 2k-vector (x1, y1, x2, y2, ...), and the symmetric
// 2k-by-2k Hessian, both analytic.
Eigen::VectorXd grad_g_star(const GreenEvaluator& g, const VortexConfig& cfg,
                            const std::vector<Vec2>& q);
Eigen::MatrixXd hessian_g_star(const GreenEvaluator& g, const VortexConfig& cfg,
                               const std::vector<Vec2>& q);

struct CriticalPointCertificate {
    std::vector<Vec2> q;
    double grad_norm = 0.0;
    std::vector<double> eigenvalues;   // Hessian spectrum at q
    double min_abs_eigenvalue = 0.0;
    bool degenerate = false;           // warning flag, not an error
    int iterations = 0;
};

// Damped Newton on the gradient; throws search_failure_error (with the
// iteration trace) if the iteration leaves the admissible set or stalls.
CriticalPointCertificate find_critical_point(const GreenEvaluator& g, const VortexConfig& cfg,
                                             std::vector<Vec2> q0, double tol = 1e-9,
                                             int max_iter = 60);

// f_{q,i}(y) = 8 pi (gamma(y,q_i) - gamma(q_i,q_i)
//              + sum_{j != i} (G(y,q_j) - G(q_i,q_j))) + u0(y) - u0(q_i).
double f_profile(const GreenEvaluator& g, const VortexConfig& cfg, const std::vector<Vec2>& q,
                 int i, Vec2 y);

// Gradient of f_{q,i} at its center q_i; vanishes at fully symmetric
// configurations, and must be small for the r -> 0 limit below to settle.
Vec2 f_profile_center_gradient(const GreenEvaluator& g, const VortexConfig& cfg,
                               const std::vector<Vec2>& q, int i);

struct DqReport {
    double value = 0.0;
    // rows: inner radius r, partial sum, Richardson extrapolant
    std::vector<std::array<double, 3>> r_tail;
    double farfield_tail = 0.0;          // -sum_i rho_i pi / R_i^2 closed form
    std::vector<double> per_bubble;
    std::string table_csv() const;
};

// D(q): per bubble, rho_i times [ integral over the cell minus B_r of
// (e^{f} - 1)/|y-q_i|^4 minus the complement integral of |y-q_i|^{-4} ],
// in the r -> 0 limit. The gradient (odd) Taylor term of e^f - 1 is
// subtracted analytically before ring quadrature; the partial sums are
// extrapolated in r^2. A non-settling table raises limit_unstable_error.
DqReport d_of_q(const GreenEvaluator& g, const VortexConfig& cfg, const ReducedConfig& rc);

} // namespace csvl
