// Acceptance harness: twelve end-to-end criteria, one pass/fail line each.
// Exits with the number of failed criteria.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "csvl/ansatz.hpp"
#include "csvl/errors.hpp"
#include "csvl/functionals.hpp"
#include "csvl/green.hpp"
#include "csvl/higgs_map.hpp"
#include "csvl/quadrature.hpp"
#include "csvl/reduction.hpp"
#include "csvl/solver.hpp"
#include "oracles.hpp"

using namespace csvl;
constexpr double pi = std::numbers::pi;

namespace {

int failures = 0;

void report(int idx, const std::string& label, bool ok, const std::string& detail) {
    std::printf("criterion %2d %-28s %s  (%s)\n", idx, label.c_str(), ok ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// Independent inverse for the substitution map: plain bisection, no shared
// code with the production Newton iteration.
double inverse_by_bisection(double u) {
    double lo = u - 1.0, hi = 0.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double val = 1.0 + mid - std::exp(mid);
        if (val > u) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

// Two unit vortices, one bubble seed: the smallest balanced configuration.
struct FixtureK1 {
    TorusDomain dom = make_domain(1.0, 1.0, 128);
    GreenEvaluator g{dom};
    VortexConfig cfg = make_vortex_config(dom, {{0.25, 0.5}, {0.75, 0.5}});
    std::vector<Vec2> q{{0.5, 0.0}};
};

// Two double vortices on one diagonal, two bubble seeds on the other.
struct FixtureK2 {
    TorusDomain dom = make_domain(1.0, 1.0, 128);
    GreenEvaluator g{dom};
    VortexConfig cfg = make_vortex_config(dom, {{0.25, 0.25}, {0.75, 0.75}}, {2, 2});
    std::vector<Vec2> q{{0.25, 0.75}, {0.75, 0.25}};
};

} // namespace

int main() {
    FixtureK1 k1;
    FixtureK2 k2;

    // Shared solve families; failures here surface in the criteria below.
    ContinuationRun run_b1, run_k2, run_m, run_b1_again, run_res;
    SolverResult res_doubled;
    bool have_doubled = false;
    std::string pipeline_note;
    try {
        run_b1 = continuation_bubbling(k1.g, k1.cfg, k1.q, {0.005, 0.0035, 0.0025});
        run_b1_again = continuation_bubbling(k1.g, k1.cfg, k1.q, {0.005});
        run_k2 = continuation_bubbling(k2.g, k2.cfg, k2.q, {0.004, 0.003, 0.002});
        run_m = continuation_maximal(k1.dom, k1.g, k1.cfg, {0.05, 0.04, 0.03});
        // Resolution sweep: near-vacuum couplings where the solution scale
        // clears the grid, so an absolute sup-v comparison is meaningful.
        run_res = continuation_maximal(k1.dom, k1.g, k1.cfg, {0.02, 0.018, 0.015});
        TorusDomain dom256 = make_domain(1.0, 1.0, 256);
        GreenEvaluator g256{dom256};
        VortexConfig cfg256 = make_vortex_config(dom256, {{0.25, 0.5}, {0.75, 0.5}});
        // The spectral Laplacian's double-precision roundoff floor at
        // n = 256 sits near 2e-10, above the default Newton tolerance.
        SolverOptions s256;
        s256.newton_tol = 1e-9;
        res_doubled = maximal_solution(dom256, g256, cfg256, run_res.eps_schedule.front(), s256);
        have_doubled = true;
    } catch (const std::exception& e) {
        pipeline_note = e.what();
    }

    std::vector<const SolveReport*> all_reports;
    for (const ContinuationRun* r : {&run_b1, &run_k2, &run_m})
        for (const SolveReport& rep : r->reports) all_reports.push_back(&rep);

    // 1. Flux identity on every converged solve.
    {
        bool ok = !all_reports.empty();
        double worst = 0.0;
        int n_conv = 0;
        for (const SolveReport* r : all_reports) {
            if (!r->converged) {
                ok = false;
                continue;
            }
            ++n_conv;
            // flux_defect is recorded against 4 pi N of its own fixture;
            // both fixtures have N in {2,4}, so normalize by 4 pi 2 as the
            // conservative choice.
            worst = std::max(worst, r->flux_defect / (4.0 * pi * 2.0));
        }
        ok = ok && n_conv == 9 && worst <= 1e-8;
        report(1, "flux identity", ok,
               pipeline_note.empty()
                   ? fmt("%.0f/9 converged, worst relative defect %.2e",
                         static_cast<double>(n_conv), worst)
                   : pipeline_note);
    }

    // 2. Sign constraint without clipping on every converged solve.
    {
        bool ok = !all_reports.empty();
        double worst = -1e300;
        for (const SolveReport* r : all_reports) {
            if (!r->converged || r->clipped) ok = false;
            worst = std::max(worst, r->sup_v);
        }
        ok = ok && worst <= 1e-10;
        report(2, "sign constraint", ok, fmt("max grid v = %.2e", worst));
    }

    // 3. Bubble identities: planar mass 8 pi and the field equation.
    {
        double mu = 5.0;
        Vec2 c{0.5, 0.5};
        double R = 0.45;
        double inner = 2.0 * pi *
                       radial_integral(
                           [mu](double r) {
                               return 8.0 * mu * mu / std::pow(1.0 + mu * mu * r * r, 2);
                           },
                           R);
        double tail = 8.0 * pi / (1.0 + mu * mu * R * R);
        double mass_err = std::abs(inner + tail - 8.0 * pi) / (8.0 * pi);

        double pde_err = 0.0, h = 1e-4;
        for (Vec2 y : {Vec2{0.55, 0.5}, Vec2{0.52, 0.47}, Vec2{0.61, 0.58}}) {
            double lap =
                (bubble(k1.dom, c, mu, {y.x + h, y.y}) + bubble(k1.dom, c, mu, {y.x - h, y.y}) +
                 bubble(k1.dom, c, mu, {y.x, y.y + h}) + bubble(k1.dom, c, mu, {y.x, y.y - h}) -
                 4.0 * bubble(k1.dom, c, mu, y)) /
                (h * h);
            double rhs = std::exp(bubble(k1.dom, c, mu, y));
            pde_err = std::max(pde_err, std::abs(-lap - rhs) / rhs);
        }
        report(3, "bubble identities", mass_err <= 1e-6 && pde_err <= 1e-6,
               fmt("mass defect %.2e, field-equation defect %.2e", mass_err, pde_err));
    }

    // 4. Ansatz masses approach the bubble quanta with defect ~ ln mu / mu^2.
    {
        std::vector<double> lx, l2, l3;
        for (double mu : {8.0, 16.0, 32.0, 64.0}) {
            BubbleParams p =
                make_bubble_params(k1.g, k1.cfg, k1.q, mu, 1.0 / (mu * mu), 0.2);
            AnsatzIntegrals I = ansatz_integrals(p, k1.g, k1.cfg, 128);
            double denom = p.rho[0]; // k = 1
            double est2 = bubble_mass(p, k1.g, k1.cfg, 0) / (denom * 8.0 * pi);
            double est3 = I.mass1 * std::exp(I.mean_w_star) / (denom * 8.0 * pi);
            lx.push_back(std::log(std::log(mu) / (mu * mu)));
            l2.push_back(std::log(std::abs(est2 - 1.0)));
            l3.push_back(std::log(std::abs(est3 - 1.0)));
        }
        double s2 = fit_slope(lx, l2), s3 = fit_slope(lx, l3);
        bool ok = s2 > 0.7 && s2 < 1.3 && s3 > 0.7 && s3 < 1.3;
        report(4, "ansatz mass scaling", ok, fmt("local slope %.3f, global slope %.3f", s2, s3));
    }

    // 5. Weighted-norm residual scaling of the matched profile.
    {
        std::vector<double> lx, ly;
        bool monotone = true;
        double prev = 1e300;
        for (double mu : {8.0, 16.0, 32.0, 64.0}) {
            double eps = 1.0 / (mu * mu);
            BubbleParams p = make_bubble_params(k1.g, k1.cfg, k1.q, mu, eps, 0.0625);
            AnsatzIntegrals I = ansatz_integrals(p, k1.g, k1.cfg);
            double c = c_from_integrals(I, p.k(), eps);
            double background = 8.0 * p.k() * pi / k1.dom.area();
            auto resid = [&](Vec2 y) {
                double u = 1.0 + k1.g.u0(k1.cfg, y) + w_star(p, k1.g, y) - I.mean_w_star + c;
                if (u > 0.0) u = 0.0; // roundoff guard at the bubble peaks
                return lap_w_star(p, k1.dom, y) + nonlinearity(u, eps) - background;
            };
            double ynorm = weighted_norm_Y(resid, p, k1.dom);
            monotone = monotone && ynorm < prev;
            prev = ynorm;
            lx.push_back(std::log(mu));
            ly.push_back(std::log(ynorm));
        }
        double slope = fit_slope(lx, ly);
        bool ok = monotone && slope > -2.1 && slope < -1.6;
        report(5, "residual scaling", ok, fmt("fitted slope %.3f", slope));
    }

    // 6. Approximate-kernel residual scaling.
    {
        std::vector<double> lx, l0, lij;
        for (double mu : {8.0, 16.0, 32.0, 64.0}) {
            double eps = 1.0 / (mu * mu);
            BubbleParams p = make_bubble_params(k1.g, k1.cfg, k1.q, mu, eps, 0.0625);
            lx.push_back(std::log(mu));
            l0.push_back(std::log(kernel_residual_sup_Y0(p, k1.dom)));
            lij.push_back(std::log(std::max(kernel_residual_sup_Yij(p, k1.dom, 0, 0),
                                            kernel_residual_sup_Yij(p, k1.dom, 0, 1))));
        }
        double s0 = fit_slope(lx, l0), sij = fit_slope(lx, lij);
        bool ok = s0 > -3.4 && s0 < -2.6 && sij > -0.4 && sij < 0.4;
        report(6, "kernel scaling", ok, fmt("dilation slope %.3f, translation slope %.3f", s0, sij));
    }

    // 7. Reduced-system structure and the flipped-sign infeasibility.
    {
        bool ok = true;
        std::string note;
        try {
            ReducedSolution rs = solve_reduced(k1.g, k1.cfg, k1.q, 0.005, {});
            double rij = 0.0;
            for (double r : rs.Rij_normalized) rij = std::max(rij, std::abs(r));
            ok = ok && std::abs(rs.R0_normalized) <= 1e-8 && rij <= 1e-6 &&
                 rs.params.mu_in_window();
            note = fmt("|R0| %.1e, max |Rij| %.1e, mu %.2f", std::abs(rs.R0_normalized), rij,
                       rs.mu);
        } catch (const std::exception& e) {
            ok = false;
            note = e.what();
        }
        bool flipped_infeasible = false;
        try {
            ReducedOptions flip;
            flip.flip_d_term = true;
            (void)solve_reduced(k1.g, k1.cfg, k1.q, 0.005, flip);
        } catch (const reduced_infeasible_error&) {
            flipped_infeasible = true; // the front end maps this to exit 5
        } catch (const std::exception&) {
        }
        report(7, "reduced-system structure", ok && flipped_infeasible,
               note + (flipped_infeasible ? ", flipped sign infeasible" : ", flip NOT detected"));
    }

    // 8. Equidistributed concentration for k = 2 at the smallest eps.
    {
        bool ok = run_k2.reports.size() == 3;
        std::string note = pipeline_note;
        if (ok) {
            const SolveReport& last = run_k2.reports.back();
            double f1 = last.concentration[0], f2 = last.concentration[1];
            bool dec = run_k2.reports[1].sup_v < run_k2.reports[0].sup_v &&
                       run_k2.reports[2].sup_v < run_k2.reports[1].sup_v;
            ok = last.converged && std::abs(f1 - 0.5) <= 0.05 && std::abs(f2 - 0.5) <= 0.05 && dec;
            note = fmt("fractions %.3f / %.3f, sup v decreasing ", f1, f2) + (dec ? "yes" : "no");
        }
        report(8, "bubbling concentration", ok, note);
    }

    // 9. Maximal family: pointwise monotone, L2 strictly decreasing.
    {
        bool ok = run_m.reports.size() == 3;
        double min_gap = 1e300;
        bool l2dec = true;
        if (ok) {
            for (const SolveReport& r : run_m.reports) ok = ok && r.converged && !r.clipped;
            for (std::size_t i = 1; i < run_m.v_fields.size(); ++i) {
                for (std::size_t s = 0; s < run_m.v_fields[i].values.size(); ++s)
                    min_gap = std::min(min_gap,
                                       run_m.v_fields[i].values[s] - run_m.v_fields[i - 1].values[s]);
                l2dec = l2dec && run_m.reports[i].l2_of_v < run_m.reports[i - 1].l2_of_v;
            }
            ok = ok && min_gap > -1e-9 && l2dec;
        }
        report(9, "maximal monotonicity", ok,
               run_m.reports.empty()
                   ? pipeline_note
                   : fmt("min pointwise gap %.2e, L2 decreasing ", min_gap) +
                         (l2dec ? "yes" : "no"));
    }

    // 10. Cross-branch domination at matched eps.
    {
        bool ok = !run_b1.v_fields.empty();
        std::string note = pipeline_note;
        if (ok) {
            try {
                SolverResult mx = maximal_solution(k1.dom, k1.g, k1.cfg, 0.005);
                double gap = 1e300;
                for (std::size_t s = 0; s < mx.v.values.size(); ++s)
                    gap = std::min(gap, mx.v.values[s] - run_b1.v_fields[0].values[s]);
                ok = mx.report.residual_sup <= 1e-10 && gap > -1e-9;
                note = fmt("min pointwise gap %.3f, maximal residual %.1e", gap,
                           mx.report.residual_sup);
            } catch (const std::exception& e) {
                ok = false;
                note = e.what();
            }
        }
        report(10, "cross-branch domination", ok, note);
    }

    // 11. Oracle equivalences: inverse map, Green function, derivatives.
    {
        double worst_inv = 0.0;
        for (int i = 0; i < 10000; ++i) {
            double u = -30.0 * (i + 0.5) / 10000.0;
            worst_inv = std::max(worst_inv, std::abs(F_inverse(u) - inverse_by_bisection(u)) /
                                                (1.0 + std::abs(u)));
        }

        oracle::ThetaGreen ref(1.0, 1.0);
        std::mt19937 rng(7);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        double worst_green = 0.0;
        for (int i = 0; i < 100; ++i) {
            Vec2 x{uni(rng), uni(rng)}, y{uni(rng), uni(rng)};
            if (k1.dom.dist(x, y) < 1e-3) continue;
            worst_green = std::max(
                worst_green, std::abs(k1.g.green(x, y) - ref.green(x.x - y.x, x.y - y.y)));
        }

        // Analytic derivatives against centered differences.
        double h = 1e-5;
        Vec2 x{0.3, 0.2}, y{0.8, 0.55};
        Vec2 gg = k1.g.grad_green(x, y);
        double fgx = (k1.g.green({x.x + h, x.y}, y) - k1.g.green({x.x - h, x.y}, y)) / (2.0 * h);
        double fgy = (k1.g.green({x.x, x.y + h}, y) - k1.g.green({x.x, x.y - h}, y)) / (2.0 * h);
        double worst_fd = std::max(std::abs(gg.x - fgx), std::abs(gg.y - fgy));

        Field u0 = k1.g.u0_field(k1.cfg, k1.dom);
        Field phi = sample(k1.dom, [](Vec2 p) {
            return -3.0 + 0.3 * std::cos(2.0 * pi * p.x) * std::cos(2.0 * pi * p.y);
        });
        Field dir = sample(k1.dom, [](Vec2 p) { return std::sin(2.0 * pi * (p.x + 2.0 * p.y)); });
        Field ja = jacobian_apply(phi, u0, dir, 0.05);
        Field pp = zip(phi, dir, [&](double a, double b) { return a + h * b; });
        Field pm = zip(phi, dir, [&](double a, double b) { return a - h * b; });
        Field rp = residual(pp, u0, k1.cfg.N, 0.05);
        Field rm = residual(pm, u0, k1.cfg.N, 0.05);
        double sup_j = 0.0, sup_fd_j = 0.0;
        for (std::size_t s = 0; s < ja.values.size(); ++s) {
            double fd = (rp.values[s] - rm.values[s]) / (2.0 * h);
            sup_j = std::max(sup_j, std::abs(ja.values[s]));
            sup_fd_j = std::max(sup_fd_j, std::abs(fd - ja.values[s]));
        }
        double rel_j = sup_fd_j / sup_j;

        bool ok = worst_inv <= 1e-12 && worst_green <= 1e-8 && worst_fd <= 1e-5 && rel_j <= 1e-5;
        report(11, "oracle equivalences", ok,
               fmt("inverse %.1e, green %.1e, derivatives %.1e", worst_inv, worst_green,
                   std::max(worst_fd, rel_j)));
    }

    // 12. Determinism and resolution at the largest swept eps.
    {
        bool ok = !run_b1.v_fields.empty() && !run_b1_again.v_fields.empty() &&
                  !run_res.reports.empty() && have_doubled;
        std::string note = pipeline_note;
        if (ok) {
            bool identical =
                run_b1.v_fields[0].values.size() == run_b1_again.v_fields[0].values.size() &&
                std::memcmp(run_b1.v_fields[0].values.data(),
                            run_b1_again.v_fields[0].values.data(),
                            run_b1.v_fields[0].values.size() * sizeof(double)) == 0;
            double dsup = std::abs(run_res.reports[0].sup_v - res_doubled.report.sup_v);
            ok = identical && run_res.reports[0].converged && res_doubled.report.converged &&
                 dsup <= 1e-6;
            note = std::string("rerun identical ") + (identical ? "yes" : "no") +
                   fmt(", |sup v(256) - sup v(128)| = %.2e", dsup);
        }
        report(12, "determinism and resolution", ok, note);
    }

    std::printf("%d of 12 criteria failed\n", failures);
    return failures;
}
