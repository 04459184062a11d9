#include "csvl/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "csvl/ansatz.hpp"
#include "csvl/errors.hpp"

namespace csvl {

namespace {

constexpr double kPi = std::numbers::pi;

void check_admissible(const TorusDomain& dom, const VortexConfig& cfg,
                      const std::vector<Vec2>& q) {
    if (q.empty()) throw invalid_configuration_error("reduced config: empty q");
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = i + 1; j < q.size(); ++j)
            if (dom.dist(q[i], q[j]) < 1e-9)
                throw invalid_configuration_error("reduced config: coincident q points");
        for (const Vec2& p : cfg.points)
            if (dom.dist(q[i], p) < 1e-9)
                throw invalid_configuration_error("reduced config: q on a vortex point");
    }
}

} // namespace

ReducedConfig make_reduced_config(const GreenEvaluator& g, const VortexConfig& cfg,
                                  std::vector<Vec2> q) {
    const TorusDomain& dom = g.domain();
    for (Vec2& p : q) p = {wrap_positive(p.x, dom.L1), wrap_positive(p.y, dom.L2)};
    check_admissible(dom, cfg, q);
    ReducedConfig rc;
    rc.q = std::move(q);
    for (std::size_t i = 0; i < rc.q.size(); ++i)
        rc.cells.push_back(voronoi_cell(dom, rc.q, static_cast<int>(i)));
    return rc;
}

double g_star(const GreenEvaluator& g, const VortexConfig& cfg, const std::vector<Vec2>& q) {
    check_admissible(g.domain(), cfg, q);
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        acc += g.u0(cfg, q[i]);
        for (std::size_t j = 0; j < q.size(); ++j)
            if (j != i) acc += 8.0 * kPi * g.green(q[i], q[j]);
    }
    return acc;
}

Eigen::VectorXd grad_g_star(const GreenEvaluator& g, const VortexConfig& cfg,
                            const std::vector<Vec2>& q) {
    check_admissible(g.domain(), cfg, q);
    const int k = static_cast<int>(q.size());
    Eigen::VectorXd out(2 * k);
    for (int i = 0; i < k; ++i) {
        Vec2 grad = g.grad_u0(cfg, q[i]);
        for (int j = 0; j < k; ++j)
            if (j != i) grad += 16.0 * kPi * g.grad_green(q[i], q[j]);
        out(2 * i) = grad.x;
        out(2 * i + 1) = grad.y;
    }
    return out;
}

Eigen::MatrixXd hessian_g_star(const GreenEvaluator& g, const VortexConfig& cfg,
                               const std::vector<Vec2>& q) {
    check_admissible(g.domain(), cfg, q);
    const int k = static_cast<int>(q.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * k, 2 * k);
    for (int i = 0; i < k; ++i) {
        Mat2 d = g.hess_u0(cfg, q[i]);
        for (int j = 0; j < k; ++j) {
            if (j == i) continue;
            Mat2 hij = g.hess_green(q[i], q[j]);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    d[a][b] += 16.0 * kPi * hij[a][b];
                    // cross block: G(q_i, q_j) depends on q_i - q_j
                    H(2 * i + a, 2 * j + b) = -16.0 * kPi * hij[a][b];
                }
        }
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) H(2 * i + a, 2 * i + b) = d[a][b];
    }
    return 0.5 * (H + H.transpose());
}

CriticalPointCertificate find_critical_point(const GreenEvaluator& g, const VortexConfig& cfg,
                                             std::vector<Vec2> q0, double tol, int max_iter) {
    const TorusDomain& dom = g.domain();
    for (Vec2& p : q0) p = {wrap_positive(p.x, dom.L1), wrap_positive(p.y, dom.L2)};
    check_admissible(dom, cfg, q0);
    const int k = static_cast<int>(q0.size());

    auto admissible = [&](const std::vector<Vec2>& q) {
        for (int i = 0; i < k; ++i) {
            for (int j = i + 1; j < k; ++j)
                if (dom.dist(q[i], q[j]) < 1e-6) return false;
            for (const Vec2& p : cfg.points)
                if (dom.dist(q[i], p) < 1e-6) return false;
        }
        return true;
    };

    std::ostringstream trace;
    trace << "iter,grad_norm,step\n";

    std::vector<Vec2> q = q0;
    Eigen::VectorXd gr = grad_g_star(g, cfg, q);
    int it = 0;
    for (; it < max_iter; ++it) {
        double gn = gr.norm();
        trace << it << "," << gn << ",0\n";
        if (gn <= tol) break;

        Eigen::MatrixXd H = hessian_g_star(g, cfg, q);
        Eigen::VectorXd step = -H.fullPivLu().solve(gr);
        if (!step.allFinite()) throw search_failure_error("critical point search: singular step",
                                                          trace.str());
        double t = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 14; ++bt) {
            std::vector<Vec2> qt(k);
            for (int i = 0; i < k; ++i) {
                qt[i] = {wrap_positive(q[i].x + t * step(2 * i), dom.L1),
                         wrap_positive(q[i].y + t * step(2 * i + 1), dom.L2)};
            }
            if (admissible(qt)) {
                Eigen::VectorXd grt = grad_g_star(g, cfg, qt);
                if (grt.norm() < (1.0 - 0.25 * t) * gn || grt.norm() <= tol) {
                    q = qt;
                    gr = grt;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted)
            throw search_failure_error("critical point search: line search stalled", trace.str());
    }
    if (gr.norm() > tol)
        throw search_failure_error("critical point search: no convergence", trace.str());

    CriticalPointCertificate cert;
    cert.q = q;
    cert.grad_norm = gr.norm();
    cert.iterations = it;
    Eigen::MatrixXd H = hessian_g_star(g, cfg, q);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    double max_abs = 0.0, min_abs = 1e300;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        double ev = es.eigenvalues()(i);
        cert.eigenvalues.push_back(ev);
        max_abs = std::max(max_abs, std::abs(ev));
        min_abs = std::min(min_abs, std::abs(ev));
    }
    cert.min_abs_eigenvalue = min_abs;
    cert.degenerate = (min_abs < 1e-6 * std::max(1.0, max_abs));
    return cert;
}

double f_profile(const GreenEvaluator& g, const VortexConfig& cfg, const std::vector<Vec2>& q,
                 int i, Vec2 y) {
    double acc = g.gamma(y, q[i]) - g.gamma_diag();
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (static_cast<int>(j) == static_cast<int>(i)) continue;
        acc += g.green(y, q[j]) - g.green(q[i], q[j]);
    }
    return 8.0 * kPi * acc + g.u0(cfg, y) - g.u0(cfg, q[i]);
}

Vec2 f_profile_center_gradient(const GreenEvaluator& g, const VortexConfig& cfg,
                               const std::vector<Vec2>& q, int i) {
    // grad gamma vanishes on the diagonal by evenness of the regular part.
    Vec2 a = g.grad_u0(cfg, q[i]);
    for (std::size_t j = 0; j < q.size(); ++j)
        if (static_cast<int>(j) != i) a += 8.0 * kPi * g.grad_green(q[i], q[j]);
    return a;
}

std::string DqReport::table_csv() const {
    std::ostringstream os;
    os.precision(15);
    os << "r,partial_sum,extrapolant\n";
    for (const auto& row : r_tail) os << row[0] << "," << row[1] << "," << row[2] << "\n";
    return os.str();
}

DqReport d_of_q(const GreenEvaluator& g, const VortexConfig& cfg, const ReducedConfig& rc) {
    const int k = static_cast<int>(rc.q.size());
    if (static_cast<int>(rc.cells.size()) != k)
        throw invalid_configuration_error("d_of_q: partition size mismatch");
    std::vector<double> rho = rho_weights(cfg, g, rc.q);

    DqReport rep;
    const int M = rc.r_levels;
    // partials[i][m]: bubble i's contribution with inner radius R_i 2^{-m-1}.
    std::vector<std::vector<double>> partials(k);

    for (int i = 0; i < k; ++i) {
        const StarCell& cell = rc.cells[i];
        double R = 0.999 * cell.inradius();
        if (rc.r0 > 0.0) R = std::min(R, rc.r0);
        Vec2 qi = rc.q[i];
        Vec2 a = f_profile_center_gradient(g, cfg, rc.q, i);

        auto efrac = [&](Vec2 y) {
            double s2 = g.domain().delta(y, qi).norm2();
            return std::exp(f_profile(g, cfg, rc.q, i, y)) / (s2 * s2);
        };
        double outer = integrate_cell_outside(cell, R, efrac, rc.n_theta_cell);
        double tail = kPi / (R * R);
        rep.farfield_tail -= rho[i] * tail;

        auto ring_term = [&](double r) {
            // mean times 2 pi of (e^f - 1 - a.z)/r^4 over the circle
            return r *
                   ring_mean(
                       [&](Vec2 y) {
                           Vec2 z = g.domain().delta(y, qi);
                           double s2 = z.norm2();
                           return (std::expm1(f_profile(g, cfg, rc.q, i, y)) - a.dot(z)) /
                                  (s2 * s2);
                       },
                       qi, r, rc.n_theta);
        };

        double acc = outer - tail;
        std::vector<double>& pi_rows = partials[i];
        double hi = R;
        for (int m = 0; m <= M; ++m) {
            double lo = 0.5 * hi;
            acc += gauss_segment(ring_term, lo, hi, 16);
            pi_rows.push_back(rho[i] * acc);
            hi = lo;
        }
    }

    // Combined partial sums and r^2 Richardson extrapolation.
    std::vector<double> S(M + 1, 0.0), E(M + 1, 0.0);
    double Rmax = 0.0;
    for (int i = 0; i < k; ++i) Rmax = std::max(Rmax, 0.999 * rc.cells[i].inradius());
    for (int m = 0; m <= M; ++m) {
        for (int i = 0; i < k; ++i) S[m] += partials[i][m];
        E[m] = (m == 0) ? S[m] : S[m] + (S[m] - S[m - 1]) / 3.0;
        rep.r_tail.push_back({Rmax * std::pow(0.5, m + 1), S[m], E[m]});
    }
    rep.value = E[M];
    for (int i = 0; i < k; ++i) {
        double fine = partials[i][M], prev = partials[i][M - 1];
        rep.per_bubble.push_back(fine + (fine - prev) / 3.0);
    }

    if (std::abs(E[M] - E[M - 1]) > 1e-4 * (1.0 + std::abs(E[M])))
        throw limit_unstable_error("d_of_q: r -> 0 extrapolation did not settle",
                                   rep.table_csv());
    return rep;
}

} // namespace csvl
