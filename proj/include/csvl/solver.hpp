#pragma once

#include <string>
#include <vector>

#include "csvl/green.hpp"
#include "csvl/reduction.hpp"
#include "csvl/spectral_torus.hpp"

namespace csvl {

struct SolverOptions {
    double newton_tol = 1e-10; // on the mean-normalized residual sup norm
    int max_newton = 50;
    int gmres_restart = 60;
    int gmres_max_iter = 2000;
    double gmres_tol = 1e-8;
    int max_monotone = 20000;      // cap on the monotone sweep
    double monotone_handoff = 1e-6; // step size where the Newton polish takes over
};

/// Diagnostics of one converged (or failed) solve. v = F_inverse(u) is the
/// original unknown, u = u0 + phi the substituted one, mean_u its average
/// (the quantity whose exponential separates the two branches).
struct SolveReport {
    bool converged = false;
    std::vector<double> newton_trace; // residual per accepted iterate
    double residual_sup = 0.0;        // final normalized residual
    double flux_defect = 0.0;         // |integral of N_eps - 4 pi N|
    double sup_v = 0.0;               // max over the grid (<= 0 on the branch)
    double sup_abs_v = 0.0;
    double mean_u = 0.0;
    double l2_of_v = 0.0;
    std::vector<double> concentration; // k ball fractions then the total
    std::string branch_label = "undetermined";
    bool clipped = false; // branch guard active at the final iterate

    std::string text() const; // key=value lines
};

// R(phi) = Lap phi + N_eps(u0 + phi) - 4 pi N / |Omega| - source, the
// equation for the smooth part phi with the delta flux of u0 absorbed
// analytically. Throws out_of_branch_error (reporting the worst node) if
// u0 + phi is positive anywhere.
Field residual(const Field& phi, const Field& u0, int N, double eps,
               const Field* source = nullptr);

// (Lap + N'_eps(u0 + phi)) applied to dir; symmetric in the grid inner
// product (Laplacian plus a multiplication operator).
Field jacobian_apply(const Field& phi, const Field& u0, const Field& dir, double eps);

struct SolverResult {
    Field phi;
    Field u; // u0 + phi
    Field v; // F_inverse(u)
    SolveReport report;
};

// Damped Newton-Krylov on R(phi) = 0 from the given iterate. The branch
// guard clips u to <= 0 only inside the line search; the converged
// solution must satisfy the bound on its own (reported via clipped).
// Throws nonconvergence_error with the trace if the iteration stalls.
SolverResult newton_solve(const Field& phi0, const GreenEvaluator& g, const VortexConfig& cfg,
                          double eps, const SolverOptions& opts = {},
                          const Field* source = nullptr);

// Maximal-branch solve: monotone iteration
//   (Lap - K) phi_{n+1} = -K phi_n - N_eps(u0 + phi_n) + 4 pi N / |Omega|,
// K = 1.1 sup|N'_eps(u_n)| refreshed each step, decreasing from u = 0
// (or from the supplied supersolution start), then a Newton polish to
// newton_tol. Throws nonconvergence_error when the iterates diverge
// (coupling above the existence threshold).
SolverResult maximal_solution(const TorusDomain& grid, const GreenEvaluator& g,
                              const VortexConfig& cfg, double eps,
                              const SolverOptions& opts = {}, const Field* phi_start = nullptr);

// Mass fractions of e^v carried by the delta-balls around the points q,
// followed by their total.
std::vector<double> concentration(const Field& v, const std::vector<Vec2>& q, double delta);

/// A warm-started family of solves along a decreasing eps schedule.
struct ContinuationRun {
    std::vector<double> eps_schedule;
    std::vector<SolveReport> reports;
    std::vector<Field> v_fields;
    std::vector<double> mu_values; // bubbling branch only
    std::string branch;            // "bubbling" | "maximal"
};

// Bubbling branch: per eps, the reduced solve fixes mu, the matched ansatz
// plus inner correction seeds the full Newton solve. delta sets the
// concentration balls around q.
ContinuationRun continuation_bubbling(const GreenEvaluator& g, const VortexConfig& cfg,
                                      const std::vector<Vec2>& q,
                                      const std::vector<double>& eps_schedule,
                                      double delta = 0.1, const ReducedOptions& ropts = {},
                                      const SolverOptions& sopts = {});

// Maximal branch along the schedule, warm-starting each solve from the
// previous one (a supersolution, so the monotone descent is preserved).
ContinuationRun continuation_maximal(const TorusDomain& grid, const GreenEvaluator& g,
                                     const VortexConfig& cfg,
                                     const std::vector<double>& eps_schedule,
                                     const SolverOptions& sopts = {});

// Branch label from the trends of a family (needs >= 3 eps points):
// "topological" when |v| shrinks in sup and L2 and e^{mean u} climbs
// toward 1, "non-topological" when sup v falls without bound and
// e^{mean u} decays, otherwise "undetermined".
std::string classify(const ContinuationRun& run);

} // namespace csvl
