#include "csvl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "csvl/higgs_map.hpp"
#include "csvl/krylov.hpp"
#include "csvl/parallel.hpp"

namespace csvl {

namespace {

constexpr double kPi = std::numbers::pi;

double median_of(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

// C1 linear extension of the nonlinearity past the branch edge u = 0
// (slope -2/eps^2 there). Iterations use it so the Jacobian stays the
// true derivative when roundoff pushes u marginally positive; converged
// solutions must end up back at u <= 0 on their own.
double n_ext(double u, double eps) {
    return u > 0.0 ? -2.0 * u / (eps * eps) : nonlinearity(u, eps);
}

double n_ext_derivative(double u, double eps) {
    return u > 0.0 ? -2.0 / (eps * eps) : nonlinearity_derivative(u, eps);
}

// Residual with the branch guard; reports whether u left the branch by
// more than roundoff. Used inside iterations only.
Field residual_guarded(const Field& phi, const Field& u0, int N, double eps,
                       const Field* source, bool& clipped) {
    const TorusDomain& grid = phi.domain;
    Field lap_phi = laplacian(phi);
    double background = 4.0 * N * kPi / grid.area();
    Field r(grid);
    bool clip = false;
    for (std::size_t s = 0; s < r.values.size(); ++s) {
        double u = u0.values[s] + phi.values[s];
        if (u > 1e-12) clip = true;
        r.values[s] = lap_phi.values[s] + n_ext(u, eps) - background;
        if (source) r.values[s] -= source->values[s];
    }
    clipped = clip;
    return r;
}

void fill_report_fields(SolveReport& rep, const Field& u0, const Field& phi, int N,
                        double eps, Field& u_out, Field& v_out) {
    const TorusDomain& grid = phi.domain;
    u_out = Field(grid);
    v_out = Field(grid);
    double max_u = -1e300;
    for (std::size_t s = 0; s < u_out.values.size(); ++s) {
        double u = u0.values[s] + phi.values[s];
        max_u = std::max(max_u, u);
        u_out.values[s] = u;
        v_out.values[s] = F_inverse(std::min(0.0, u));
    }
    rep.clipped = max_u > 1e-12;
    rep.sup_v = v_out.max();
    rep.sup_abs_v = v_out.sup_abs();
    rep.mean_u = mean(u_out);
    rep.l2_of_v = norm_l2(v_out);
    Field n_field = map(u_out, [&](double u) { return nonlinearity(std::min(0.0, u), eps); });
    rep.flux_defect = std::abs(integrate(n_field) - 4.0 * N * kPi);
}

bool strictly_decreasing(const std::vector<double>& v, double slack = 0.0) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1] + slack)) return false;
    return true;
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
    return true;
}

} // namespace

std::string SolveReport::text() const {
    std::ostringstream os;
    os << "converged=" << (converged ? 1 : 0) << "\n"
       << "residual_sup=" << residual_sup << "\n"
       << "flux_defect=" << flux_defect << "\n"
       << "sup_v=" << sup_v << "\n"
       << "sup_abs_v=" << sup_abs_v << "\n"
       << "mean_u=" << mean_u << "\n"
       << "l2_of_v=" << l2_of_v << "\n"
       << "branch_label=" << branch_label << "\n"
       << "clipped=" << (clipped ? 1 : 0) << "\n";
    for (std::size_t i = 0; i + 1 < concentration.size(); ++i)
        os << "concentration_" << i << "=" << concentration[i] << "\n";
    if (!concentration.empty()) os << "concentration_total=" << concentration.back() << "\n";
    return os.str();
}

Field residual(const Field& phi, const Field& u0, int N, double eps, const Field* source) {
    if (!(phi.domain == u0.domain))
        throw invalid_configuration_error("residual: grid mismatch between phi and u0");
    double worst = -1e300;
    int wx = 0, wy = 0;
    const TorusDomain& grid = phi.domain;
    for (int iy = 0; iy < grid.n; ++iy)
        for (int ix = 0; ix < grid.n; ++ix) {
            double u = u0.at(ix, iy) + phi.at(ix, iy);
            if (u > worst) {
                worst = u;
                wx = ix;
                wy = iy;
            }
        }
    if (worst > 0.0) {
        std::ostringstream os;
        os << "residual: u = " << worst << " > 0 at node (" << wx << "," << wy << ")";
        throw out_of_branch_error(os.str());
    }
    bool clipped = false;
    return residual_guarded(phi, u0, N, eps, source, clipped);
}

Field jacobian_apply(const Field& phi, const Field& u0, const Field& dir, double eps) {
    Field out = laplacian(dir);
    for (std::size_t s = 0; s < out.values.size(); ++s) {
        double u = std::min(0.0, u0.values[s] + phi.values[s]);
        out.values[s] += nonlinearity_derivative(u, eps) * dir.values[s];
    }
    return out;
}

SolverResult newton_solve(const Field& phi0, const GreenEvaluator& g, const VortexConfig& cfg,
                          double eps, const SolverOptions& opts, const Field* source) {
    const TorusDomain& grid = phi0.domain;
    const std::size_t nn = grid.num_nodes();
    Field u0 = g.u0_field(cfg, grid);
    u0.declared_mean.reset();
    const double scale = 4.0 * cfg.N * kPi / grid.area();

    Field phi = phi0;
    phi.declared_mean.reset();
    bool clipped = false;
    Field F = residual_guarded(phi, u0, cfg.N, eps, source, clipped);
    double res = F.sup_abs() / scale;

    SolverResult out;
    out.report.newton_trace.push_back(res);
    std::ostringstream trace;
    trace << "iter,residual,gmres_iters,step\n";

    for (int it = 0; it < opts.max_newton && res > opts.newton_tol; ++it) {
        std::vector<double> nprime(nn), damp(nn);
        for (std::size_t s = 0; s < nn; ++s) {
            nprime[s] = n_ext_derivative(u0.values[s] + phi.values[s], eps);
            damp[s] = std::max(0.0, -nprime[s]);
        }
        double shift = std::max(1.0, median_of(damp));

        auto apply = [&](const std::vector<double>& v) {
            Field dv(grid);
            std::copy(v.begin(), v.end(), dv.values.begin());
            Field lap_dv = laplacian(dv);
            std::vector<double> o(nn);
            for (std::size_t s = 0; s < nn; ++s)
                o[s] = lap_dv.values[s] + nprime[s] * dv.values[s];
            return o;
        };
        auto precond = [&](const std::vector<double>& v) {
            Field rf(grid);
            std::copy(v.begin(), v.end(), rf.values.begin());
            Field sol = helmholtz_solve(rf, shift);
            return sol.values;
        };

        std::vector<double> rhs(nn);
        for (std::size_t s = 0; s < nn; ++s) rhs[s] = -F.values[s];
        KrylovOptions kopts;
        kopts.restart = opts.gmres_restart;
        kopts.max_iter = opts.gmres_max_iter;
        kopts.tol = std::max(opts.gmres_tol, std::min(1e-2, 0.01 * res / (1.0 + res)));
        std::vector<double> step;
        KrylovResult kr = gmres(apply, rhs, step, kopts, precond);
        for (double v : step)
            if (!std::isfinite(v))
                throw linear_solve_failure("newton solve: Krylov step not finite");

        double t = 1.0;
        bool accepted = false;
        Field phi_t = phi;
        for (int bt = 0; bt < 12; ++bt) {
            for (std::size_t s = 0; s < nn; ++s) phi_t.values[s] = phi.values[s] + t * step[s];
            bool clip_t = false;
            Field F_t = residual_guarded(phi_t, u0, cfg.N, eps, source, clip_t);
            double res_t = F_t.sup_abs() / scale;
            if (res_t < (1.0 - 1e-4 * t) * res || res_t <= opts.newton_tol) {
                phi = phi_t;
                F = F_t;
                res = res_t;
                clipped = clip_t;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        trace << it << "," << res << "," << kr.iterations << "," << t << "\n";
        out.report.newton_trace.push_back(res);
        if (!accepted) throw nonconvergence_error("newton solve: line search stalled", trace.str());
    }
    if (res > opts.newton_tol)
        throw nonconvergence_error("newton solve: iteration cap reached", trace.str());

    out.phi = phi;
    out.report.residual_sup = res;
    fill_report_fields(out.report, u0, phi, cfg.N, eps, out.u, out.v);
    out.report.converged = res <= opts.newton_tol &&
                           out.report.flux_defect <= 10.0 * opts.newton_tol * 4.0 * cfg.N * kPi &&
                           !out.report.clipped;
    return out;
}

SolverResult maximal_solution(const TorusDomain& grid, const GreenEvaluator& g,
                              const VortexConfig& cfg, double eps, const SolverOptions& opts,
                              const Field* phi_start) {
    Field u0 = g.u0_field(cfg, grid);
    u0.declared_mean.reset();
    const std::size_t nn = grid.num_nodes();
    const double background = 4.0 * cfg.N * kPi / grid.area();

    // Start at u = 0 (a supersolution) unless a better one is supplied.
    Field phi(grid);
    if (phi_start && phi_start->domain == grid) {
        phi = *phi_start;
        phi.declared_mean.reset();
    } else {
        for (std::size_t s = 0; s < nn; ++s) phi.values[s] = -u0.values[s];
    }

    double step_sup = 1e300;
    for (int it = 0; it < opts.max_monotone; ++it) {
        double k_const = 0.0;
        for (std::size_t s = 0; s < nn; ++s)
            k_const =
                std::max(k_const, std::abs(n_ext_derivative(u0.values[s] + phi.values[s], eps)));
        k_const *= 1.1;
        if (!(k_const > 1e-12))
            throw nonconvergence_error(
                "maximal solve: iterates collapsed (coupling above the existence threshold)", "");

        Field rhs(grid);
        for (std::size_t s = 0; s < nn; ++s)
            rhs.values[s] = -k_const * phi.values[s] -
                            n_ext(u0.values[s] + phi.values[s], eps) + background;
        Field next = helmholtz_solve(rhs, k_const);
        if (!next.all_finite())
            throw nonconvergence_error("maximal solve: iterates not finite", "");
        step_sup = 0.0;
        for (std::size_t s = 0; s < nn; ++s)
            step_sup = std::max(step_sup, std::abs(next.values[s] - phi.values[s]));
        phi = next;
        if (phi.sup_abs() > 1e6)
            throw nonconvergence_error(
                "maximal solve: iterates diverged (coupling above the existence threshold)", "");
        if (step_sup <= opts.monotone_handoff) break;
    }
    if (step_sup > opts.monotone_handoff)
        throw nonconvergence_error("maximal solve: monotone sweep did not settle", "");

    SolverResult out = newton_solve(phi, g, cfg, eps, opts);
    out.report.branch_label = "topological";
    return out;
}

std::vector<double> concentration(const Field& v, const std::vector<Vec2>& q, double delta) {
    const TorusDomain& grid = v.domain;
    double total_mass = 0.0;
    std::vector<double> ball(q.size(), 0.0);
    for (int iy = 0; iy < grid.n; ++iy)
        for (int ix = 0; ix < grid.n; ++ix) {
            double w = std::exp(v.at(ix, iy));
            total_mass += w;
            Vec2 y = grid.node(ix, iy);
            for (std::size_t i = 0; i < q.size(); ++i)
                if (grid.dist(y, q[i]) <= delta) ball[i] += w;
        }
    std::vector<double> out;
    double tot = 0.0;
    for (double b : ball) {
        out.push_back(b / total_mass);
        tot += b / total_mass;
    }
    out.push_back(tot);
    return out;
}

ContinuationRun continuation_bubbling(const GreenEvaluator& g, const VortexConfig& cfg,
                                      const std::vector<Vec2>& q,
                                      const std::vector<double>& eps_schedule, double delta,
                                      const ReducedOptions& ropts, const SolverOptions& sopts) {
    for (std::size_t i = 1; i < eps_schedule.size(); ++i)
        if (!(eps_schedule[i] < eps_schedule[i - 1]))
            throw invalid_configuration_error("continuation: eps schedule must decrease");

    ContinuationRun run;
    run.branch = "bubbling";
    run.eps_schedule = eps_schedule;
    TorusDomain grid = make_domain(g.domain().L1, g.domain().L2, ropts.grid_n);
    for (double eps : eps_schedule) {
        ReducedSolution rs = solve_reduced(g, cfg, q, eps, ropts);
        AnsatzField af = build_ansatz(rs.params, g, cfg, grid);
        Field phi0 = af.W_tilde + rs.eta;
        for (double& v : phi0.values) v += 1.0;
        SolverResult sr = newton_solve(phi0, g, cfg, eps, sopts);
        sr.report.concentration = concentration(sr.v, q, delta);
        run.mu_values.push_back(rs.mu);
        run.reports.push_back(sr.report);
        run.v_fields.push_back(sr.v);
    }
    std::string label = run.reports.size() >= 3 ? classify(run) : "undetermined";
    for (SolveReport& r : run.reports) r.branch_label = label;
    return run;
}

ContinuationRun continuation_maximal(const TorusDomain& grid, const GreenEvaluator& g,
                                     const VortexConfig& cfg,
                                     const std::vector<double>& eps_schedule,
                                     const SolverOptions& sopts) {
    for (std::size_t i = 1; i < eps_schedule.size(); ++i)
        if (!(eps_schedule[i] < eps_schedule[i - 1]))
            throw invalid_configuration_error("continuation: eps schedule must decrease");

    ContinuationRun run;
    run.branch = "maximal";
    run.eps_schedule = eps_schedule;
    Field warm;
    bool have_warm = false;
    for (double eps : eps_schedule) {
        SolverResult sr =
            maximal_solution(grid, g, cfg, eps, sopts, have_warm ? &warm : nullptr);
        warm = sr.phi;
        have_warm = true;
        run.reports.push_back(sr.report);
        run.v_fields.push_back(sr.v);
    }
    std::string label = run.reports.size() >= 3 ? classify(run) : "undetermined";
    for (SolveReport& r : run.reports) r.branch_label = label;
    return run;
}

std::string classify(const ContinuationRun& run) {
    if (run.reports.size() < 3)
        throw invalid_configuration_error("classify: need at least three eps points");
    if (!strictly_decreasing(run.eps_schedule)) return "undetermined";

    std::vector<double> sup_abs, l2, exp_mean, sup_v;
    for (const SolveReport& r : run.reports) {
        sup_abs.push_back(r.sup_abs_v);
        l2.push_back(r.l2_of_v);
        exp_mean.push_back(std::exp(r.mean_u));
        sup_v.push_back(r.sup_v);
    }
    bool topo = strictly_decreasing(sup_abs) && strictly_decreasing(l2) &&
                strictly_increasing(exp_mean);
    bool nontopo = strictly_decreasing(sup_v) && strictly_decreasing(exp_mean);
    if (topo && !nontopo) return "topological";
    if (nontopo && !topo) return "non-topological";
    return "undetermined";
}

} // namespace csvl
