// Batch front end: configuration ingestion, experiment orchestration,
// persistence of fields and reports, and plot-script emission.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"

#include "csvl/ansatz.hpp"
#include "csvl/config.hpp"
#include "csvl/errors.hpp"
#include "csvl/field_io.hpp"
#include "csvl/functionals.hpp"
#include "csvl/green.hpp"
#include "csvl/reduction.hpp"
#include "csvl/solver.hpp"

namespace fs = std::filesystem;
using namespace csvl;

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Exit-code contract: 0 ok, 2 config, 3 domain error, 4 unstable limit,
// 5 reduced system infeasible, 6 nonconvergence.
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitLimitUnstable = 4;
constexpr int kExitInfeasible = 5;
constexpr int kExitNonconvergence = 6;

struct Options {
    std::string config_path;
    std::string out_dir;       // overrides [output] directory when set
    std::string branch = "bubbling";
    std::string seed_field;
    bool force = false;
    bool flip_d_term = false;
    int grid_n = 0; // override
    double mu = 0.0;
    double qx = 0.5, qy = 0.5;  // green query point
    double sx = 0.0, sy = 0.0;  // green source point
    bool have_source = false;
};

struct Context {
    ExperimentConfig cfg;
    TorusDomain dom;
    std::string hash;
};

Context make_context(const Options& opt) {
    Context ctx;
    ctx.cfg = load_config(opt.config_path);
    if (opt.grid_n > 0) ctx.cfg.n = opt.grid_n;
    if (!opt.out_dir.empty()) ctx.cfg.directory = opt.out_dir;
    ctx.dom = make_domain(ctx.cfg.L1, ctx.cfg.L2, ctx.cfg.n,
                          {ctx.cfg.offset_x, ctx.cfg.offset_y});
    ctx.hash = config_hash_hex(ctx.cfg);
    return ctx;
}

VortexConfig vortices_of(const Context& ctx) {
    return make_vortex_config(ctx.dom, ctx.cfg.vortex_points, ctx.cfg.multiplicities);
}

ReducedOptions reduced_options(const Context& ctx, const Options& opt) {
    ReducedOptions ropts;
    ropts.grid_n = ctx.cfg.n;
    ropts.d = ctx.cfg.d;
    ropts.beta0 = ctx.cfg.beta0;
    ropts.beta1 = ctx.cfg.beta1;
    ropts.tol_reduced = ctx.cfg.tol_reduced;
    ropts.flip_d_term = opt.flip_d_term;
    ropts.inner.newton_tol = ctx.cfg.newton_tol;
    return ropts;
}

SolverOptions solver_options(const Context& ctx) {
    SolverOptions sopts;
    sopts.newton_tol = ctx.cfg.newton_tol;
    return sopts;
}

fs::path out_path(const Context& ctx, const std::string& leaf) {
    fs::path dir = ctx.cfg.directory;
    fs::create_directories(dir);
    return dir / leaf;
}

std::string csv_hash_line(const Context& ctx) { return "# config_hash=" + ctx.hash + "\n"; }

int cmd_green(const Context& ctx, const Options& opt) {
    GreenEvaluator g{ctx.dom};
    VortexConfig cfg = vortices_of(ctx);
    Vec2 x{opt.qx, opt.qy};
    Vec2 y = opt.have_source ? Vec2{opt.sx, opt.sy} : cfg.points.front();
    std::cout << "G(x,y) = " << fmt(g.green(x, y)) << "\n"
              << "G(y,x) = " << fmt(g.green(y, x)) << "\n"
              << "gamma(x,y) = " << fmt(g.gamma(x, y)) << "\n"
              << "u0(x) = " << fmt(g.u0(cfg, x)) << "\n"
              << "mean_defect = " << fmt(std::abs(g.mean_of_column(y))) << "\n"
              << "config_hash = " << ctx.hash << "\n";
    if (!opt.out_dir.empty() || !ctx.cfg.directory.empty())
        write_field_file(out_path(ctx, "u0.bin"), g.u0_field(cfg, ctx.dom), "u0",
                         "u0:N=" + std::to_string(cfg.N));
    return 0;
}

int cmd_functionals(const Context& ctx, const Options&) {
    GreenEvaluator g{ctx.dom};
    VortexConfig cfg = vortices_of(ctx);
    const std::vector<Vec2>& q = ctx.cfg.bubble_seeds;

    double gs = g_star(g, cfg, q);
    Eigen::VectorXd grad = grad_g_star(g, cfg, q);
    Eigen::MatrixXd hess = hessian_g_star(g, cfg, q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);

    std::ostringstream csv;
    csv << csv_hash_line(ctx) << "quantity,value\n";
    csv << "g_star," << fmt(gs) << "\n";
    csv << "grad_norm," << fmt(grad.norm()) << "\n";
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        csv << "hessian_eig_" << (i + 1) << "," << fmt(es.eigenvalues()(i)) << "\n";

    ReducedConfig rc = make_reduced_config(g, cfg, q);
    try {
        DqReport dq = d_of_q(g, cfg, rc);
        csv << "D," << fmt(dq.value) << "\n";
        csv << "D_negative," << (dq.value < 0.0 ? 1 : 0) << "\n";
        write_atomic(out_path(ctx, "dq_table.csv"), csv_hash_line(ctx) + dq.table_csv());
        write_atomic(out_path(ctx, "functionals.csv"), csv.str());
        std::cout << "g_star = " << fmt(gs) << "\n"
                  << "grad_norm = " << fmt(grad.norm()) << "\n"
                  << "D = " << fmt(dq.value) << "\n"
                  << "D_negative = " << (dq.value < 0.0 ? 1 : 0) << "\n"
                  << "config_hash = " << ctx.hash << "\n";
    } catch (const limit_unstable_error& e) {
        write_atomic(out_path(ctx, "dq_table.csv"), csv_hash_line(ctx) + e.table);
        throw;
    }
    return 0;
}

int cmd_ansatz(const Context& ctx, const Options& opt) {
    if (!(opt.mu > 0.0))
        throw invalid_configuration_error("ansatz: --mu must be given and positive");
    GreenEvaluator g{ctx.dom};
    VortexConfig cfg = vortices_of(ctx);
    double eps = ctx.cfg.eps_schedule.empty() ? 0.005 : ctx.cfg.eps_schedule.front();
    BubbleParams p = make_bubble_params(g, cfg, ctx.cfg.bubble_seeds, opt.mu, eps, ctx.cfg.d);
    AnsatzField af = build_ansatz(p, g, cfg, ctx.dom);

    write_field_file(out_path(ctx, "w_tilde.bin"), af.W_tilde, "w_tilde");
    write_field_file(out_path(ctx, "u0.bin"), af.u0, "u0", "u0:N=" + std::to_string(cfg.N));
    std::ostringstream csv;
    csv << csv_hash_line(ctx) << "quantity,value\n"
        << "mu," << fmt(p.mu) << "\n"
        << "eps," << fmt(eps) << "\n"
        << "c," << fmt(af.c_value) << "\n"
        << "mean_w_star," << fmt(af.mean_w_star) << "\n"
        << "mass1," << fmt(af.mass1) << "\n"
        << "mass2," << fmt(af.mass2) << "\n";
    for (int i = 0; i < p.k(); ++i)
        csv << "bubble_mass_" << (i + 1) << "," << fmt(bubble_mass(p, g, cfg, i)) << "\n";
    write_atomic(out_path(ctx, "ansatz.csv"), csv.str());
    std::cout << "c = " << fmt(af.c_value) << "\nconfig_hash = " << ctx.hash << "\n";
    return 0;
}

int cmd_reduce_sweep(const Context& ctx, const Options& opt) {
    GreenEvaluator g{ctx.dom};
    VortexConfig cfg = vortices_of(ctx);
    ReducedOptions ropts = reduced_options(ctx, opt);

    std::ostringstream csv;
    csv << csv_hash_line(ctx) << "eps,mu";
    for (int i = 0; i < 2 * ctx.cfg.k(); ++i) csv << ",Rij_" << (i + 1);
    csv << ",R0,grad_g_star_norm,fitted_A0,fitted_B0\n";

    for (double eps : ctx.cfg.eps_schedule) {
        ReducedSolution rs = solve_reduced(g, cfg, ctx.cfg.bubble_seeds, eps, ropts);
        csv << fmt(eps) << "," << fmt(rs.mu);
        for (double rij : rs.Rij_normalized) csv << "," << fmt(rij);
        csv << "," << fmt(rs.R0_normalized) << "," << fmt(rs.grad_g_star_norm) << ","
            << fmt(rs.fitted_mu3_coef) << "," << fmt(rs.fitted_eps2mu_coef) << "\n";
        std::cout << "eps = " << fmt(eps) << "  mu = " << fmt(rs.mu) << "\n";
    }
    write_atomic(out_path(ctx, "sweep.csv"), csv.str());
    std::cout << "config_hash = " << ctx.hash << "\n";
    return 0;
}

std::string plots_script() {
    return R"(#!/usr/bin/env python3
# Reads summary.csv next to this script and renders the three standard
# panels: concentration vs eps, sup v vs eps, and the residual log-log.
import csv, os, sys
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
rows = []
with open(os.path.join(here, "summary.csv")) as f:
    for line in f:
        if not line.startswith("#"):
            rows.append(line)
data = list(csv.DictReader(rows))
eps = [float(r["eps"]) for r in data]
conc_cols = [c for c in data[0] if c.startswith("conc_") and c != "conc_total"]

fig, axes = plt.subplots(1, 3, figsize=(15, 4))
for c in conc_cols:
    axes[0].plot(eps, [float(r[c]) for r in data], "o-", label=c)
axes[0].set_xlabel("eps"); axes[0].set_ylabel("mass fraction"); axes[0].legend()
axes[1].plot(eps, [float(r["sup_v"]) for r in data], "o-")
axes[1].set_xlabel("eps"); axes[1].set_ylabel("sup v")
axes[2].loglog(eps, [max(float(r["residual_sup"]), 1e-17) for r in data], "o-", label="residual")
axes[2].loglog(eps, [max(float(r["flux_defect"]), 1e-17) for r in data], "s-", label="flux defect")
axes[2].set_xlabel("eps"); axes[2].legend()
fig.tight_layout()
fig.savefig(os.path.join(here, "summary.png"), dpi=150)
print("wrote", os.path.join(here, "summary.png"))
)";
}

void write_summary(const Context& ctx, const ContinuationRun& run,
                   const std::vector<double>& min_gap_prev) {
    int k = ctx.cfg.k();
    std::ostringstream csv;
    csv << csv_hash_line(ctx)
        << "idx,eps,mu,converged,clipped,residual_sup,flux_defect,sup_v,sup_abs_v,mean_u,"
           "l2_of_v,min_gap_prev";
    for (int i = 0; i < k; ++i) csv << ",conc_" << (i + 1);
    csv << ",conc_total,branch_label\n";
    for (std::size_t i = 0; i < run.reports.size(); ++i) {
        const SolveReport& r = run.reports[i];
        double mu = i < run.mu_values.size() ? run.mu_values[i] : 0.0;
        csv << i << "," << fmt(run.eps_schedule[i]) << "," << fmt(mu) << ","
            << (r.converged ? 1 : 0) << "," << (r.clipped ? 1 : 0) << ","
            << fmt(r.residual_sup) << "," << fmt(r.flux_defect) << "," << fmt(r.sup_v) << ","
            << fmt(r.sup_abs_v) << "," << fmt(r.mean_u) << "," << fmt(r.l2_of_v) << ","
            << fmt(min_gap_prev[i]);
        for (int c = 0; c < k; ++c)
            csv << "," << fmt(c < static_cast<int>(r.concentration.size()) ? r.concentration[c] : 0.0);
        csv << "," << fmt(r.concentration.empty() ? 0.0 : r.concentration.back()) << ","
            << r.branch_label << "\n";
    }
    write_atomic(out_path(ctx, "summary.csv"), csv.str());
}

int cmd_solve(const Context& ctx, const Options& opt) {
    GreenEvaluator g{ctx.dom};
    VortexConfig cfg = vortices_of(ctx);
    if (ctx.cfg.eps_schedule.empty())
        throw invalid_configuration_error("solve: empty eps schedule");

    ContinuationRun run;
    if (opt.branch == "bubbling") {
        if (!opt.seed_field.empty())
            throw invalid_configuration_error("solve: --seed-field applies to --branch maximal");
        if (!opt.force) {
            // Certify the negative-sign hypothesis before spending on solves.
            ReducedConfig rc = make_reduced_config(g, cfg, ctx.cfg.bubble_seeds);
            DqReport dq = d_of_q(g, cfg, rc);
            if (!(dq.value < 0.0)) {
                std::ostringstream os;
                os << "solve: D(q) = " << fmt(dq.value)
                   << " is not negative; rerun with --force to proceed anyway";
                throw invalid_configuration_error(os.str());
            }
        }
        run = continuation_bubbling(g, cfg, ctx.cfg.bubble_seeds, ctx.cfg.eps_schedule,
                                    ctx.cfg.delta, reduced_options(ctx, opt),
                                    solver_options(ctx));
    } else if (opt.branch == "maximal") {
        SolverOptions sopts = solver_options(ctx);
        if (!opt.seed_field.empty()) {
            Field seed = read_field_file(opt.seed_field);
            if (!(seed.domain == ctx.dom))
                throw invalid_configuration_error("solve: seed field grid mismatch");
            run.branch = "maximal";
            run.eps_schedule = ctx.cfg.eps_schedule;
            Field warm = seed;
            for (double eps : ctx.cfg.eps_schedule) {
                SolverResult sr = maximal_solution(ctx.dom, g, cfg, eps, sopts, &warm);
                warm = sr.phi;
                run.reports.push_back(sr.report);
                run.v_fields.push_back(sr.v);
            }
            std::string label = run.reports.size() >= 3 ? classify(run) : "undetermined";
            for (SolveReport& r : run.reports) r.branch_label = label;
        } else {
            run = continuation_maximal(ctx.dom, g, cfg, ctx.cfg.eps_schedule, sopts);
        }
        for (std::size_t i = 0; i < run.reports.size(); ++i)
            run.reports[i].concentration =
                concentration(run.v_fields[i], ctx.cfg.bubble_seeds, ctx.cfg.delta);
    } else {
        throw invalid_configuration_error("solve: branch must be bubbling or maximal");
    }

    // Pointwise gap against the previous (larger-eps) solution; along the
    // maximal branch this logs the monotone-family check.
    std::vector<double> min_gap_prev(run.reports.size(), 0.0);
    for (std::size_t i = 1; i < run.v_fields.size(); ++i) {
        double gap = 1e300;
        for (std::size_t s = 0; s < run.v_fields[i].values.size(); ++s)
            gap = std::min(gap, run.v_fields[i].values[s] - run.v_fields[i - 1].values[s]);
        min_gap_prev[i] = gap;
    }

    for (std::size_t i = 0; i < run.v_fields.size(); ++i) {
        char leaf[32];
        std::snprintf(leaf, sizeof leaf, "v_%04zu.bin", i);
        write_field_file(out_path(ctx, leaf), run.v_fields[i], "v");
    }
    write_summary(ctx, run, min_gap_prev);
    write_atomic(out_path(ctx, "plots.py"), plots_script());

    std::ostringstream rep;
    rep << "config_hash = " << ctx.hash << "\n"
        << "branch = " << run.branch << "\n"
        << "branch_label = " << run.reports.front().branch_label << "\n"
        << "solves = " << run.reports.size() << "\n";
    write_atomic(out_path(ctx, "report.txt"), rep.str());
    std::cout << rep.str();

    for (const SolveReport& r : run.reports)
        if (!r.converged) {
            std::cerr << "solve: not all solves converged\n";
            return kExitNonconvergence;
        }
    return 0;
}

int cmd_classify(const Context& ctx, const Options&) {
    fs::path summary = fs::path(ctx.cfg.directory) / "summary.csv";
    std::ifstream in(summary);
    if (!in) throw invalid_configuration_error("classify: cannot open " + summary.string());

    ContinuationRun run;
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            continue;
        }
        auto col = [&](const std::string& name) -> double {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == name) return std::stod(cells[i]);
            throw invalid_configuration_error("classify: missing column " + name);
        };
        run.eps_schedule.push_back(col("eps"));
        SolveReport r;
        r.sup_v = col("sup_v");
        r.sup_abs_v = col("sup_abs_v");
        r.mean_u = col("mean_u");
        r.l2_of_v = col("l2_of_v");
        run.reports.push_back(r);
    }
    std::cout << "branch_label = " << classify(run) << "\nconfig_hash = " << ctx.hash << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"doubly periodic vortex laboratory"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "experiment configuration file")
            ->required();
        sub->add_option("--out", opt.out_dir, "output directory override");
        sub->add_option("--grid-n", opt.grid_n, "grid resolution override");
        return sub;
    };

    CLI::App* green = add_common(app.add_subcommand("green", "point values of the lattice Green function"));
    green->add_option("--qx", opt.qx, "query point x");
    green->add_option("--qy", opt.qy, "query point y");
    CLI::Option* osx = green->add_option("--sx", opt.sx, "source point x");
    green->add_option("--sy", opt.sy, "source point y");

    add_common(app.add_subcommand("functionals", "interaction energy, Hessian spectrum, and D(q)"));

    CLI::App* ansatz = add_common(app.add_subcommand("ansatz", "matched bubble profile at a given scale"));
    ansatz->add_option("--mu", opt.mu, "bubble scale")->required();

    CLI::App* sweep = add_common(app.add_subcommand("reduce-sweep", "reduced-system roots along the eps schedule"));
    sweep->add_flag("--flip-d-term", opt.flip_d_term, "negate the interaction term (negative test)");

    CLI::App* solve = add_common(app.add_subcommand("solve", "full solves along the eps schedule"));
    solve->add_option("--branch", opt.branch, "bubbling|maximal")
        ->check(CLI::IsMember({"bubbling", "maximal"}));
    solve->add_flag("--force", opt.force, "skip the D(q) < 0 certificate");
    solve->add_flag("--flip-d-term", opt.flip_d_term, "negate the interaction term (negative test)");
    solve->add_option("--seed-field", opt.seed_field, "warm-start field (maximal branch)");

    add_common(app.add_subcommand("classify", "branch label from a summary.csv"));

    CLI11_PARSE(app, argc, argv);
    opt.have_source = osx->count() > 0;

    Context ctx;
    try {
        ctx = make_context(opt);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (app.got_subcommand("green")) return cmd_green(ctx, opt);
        if (app.got_subcommand("functionals")) return cmd_functionals(ctx, opt);
        if (app.got_subcommand("ansatz")) return cmd_ansatz(ctx, opt);
        if (app.got_subcommand("reduce-sweep")) return cmd_reduce_sweep(ctx, opt);
        if (app.got_subcommand("solve")) return cmd_solve(ctx, opt);
        if (app.got_subcommand("classify")) return cmd_classify(ctx, opt);
    } catch (const invalid_configuration_error& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const limit_unstable_error& e) {
        std::cerr << e.what() << "\n" << e.table;
        return kExitLimitUnstable;
    } catch (const ansatz_infeasible_error& e) {
        std::cerr << e.what() << "\n";
        return kExitInfeasible;
    } catch (const reduced_infeasible_error& e) {
        std::cerr << e.what() << "\n";
        return kExitInfeasible;
    } catch (const nonconvergence_error& e) {
        std::cerr << e.what() << "\n" << e.trace;
        return kExitNonconvergence;
    } catch (const search_failure_error& e) {
        std::cerr << e.what() << "\n" << e.trace;
        return kExitNonconvergence;
    } catch (const linear_solve_failure& e) {
        std::cerr << e.what() << "\n";
        return kExitNonconvergence;
    } catch (const std::domain_error& e) {
        // singular points and branch violations
        std::cerr << e.what() << "\n";
        return kExitDomain;
    } catch (const std::invalid_argument& e) {
        // invalid runtime configurations (bad q, mismatched grids, ...)
        std::cerr << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
