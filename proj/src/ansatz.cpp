#include "csvl/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "csvl/parallel.hpp"
#include "csvl/quadrature.hpp"

namespace csvl {

namespace {
constexpr double kPi = std::numbers::pi;
}

bool BubbleParams::mu_in_window() const {
    if (!(eps > 0.0)) return false;
    double lo = beta0 / std::sqrt(eps), hi = beta1 / std::sqrt(eps);
    return mu >= lo && mu <= hi;
}

double default_cutoff_base(const TorusDomain& dom, const VortexConfig& cfg,
                           const std::vector<Vec2>& centers, double mu) {
    std::vector<Vec2> pts = centers;
    pts.insert(pts.end(), cfg.points.begin(), cfg.points.end());
    double delta = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            delta = std::min(delta, dom.dist(pts[i], pts[j]));
    if (pts.size() < 2) delta = 0.5 * std::min(dom.L1, dom.L2);
    double s = delta / 5.0;
    return s * s + 1.0 / (mu * mu);
}

BubbleParams make_bubble_params(const GreenEvaluator& g, const VortexConfig& cfg,
                                std::vector<Vec2> centers, double mu, double eps, double d) {
    const TorusDomain& dom = g.domain();
    if (centers.empty()) throw invalid_configuration_error("bubble params: no centers");
    if (!(mu > 0.0)) throw invalid_configuration_error("bubble params: mu must be positive");
    for (Vec2& c : centers) c = {wrap_positive(c.x, dom.L1), wrap_positive(c.y, dom.L2)};
    for (std::size_t i = 0; i < centers.size(); ++i) {
        for (std::size_t j = i + 1; j < centers.size(); ++j)
            if (dom.dist(centers[i], centers[j]) < 1e-9)
                throw invalid_configuration_error("bubble params: coincident centers");
        for (const Vec2& p : cfg.points)
            if (dom.dist(centers[i], p) < 1e-9)
                throw invalid_configuration_error("bubble params: center on a vortex point");
    }

    BubbleParams out;
    out.centers = std::move(centers);
    out.mu = mu;
    out.eps = eps;
    out.d = (d > 0.0) ? d : default_cutoff_base(dom, cfg, out.centers, mu);
    out.rho = rho_weights(cfg, g, out.centers);
    for (std::size_t i = 0; i < out.centers.size(); ++i) {
        double mi = std::sqrt(out.rho[0] / out.rho[i]) * mu;
        double di2 = out.d - 1.0 / (mi * mi);
        if (!(di2 > 0.0)) {
            std::ostringstream os;
            os << "bubble params: d_i^2 = d - 1/mu_i^2 <= 0 for bubble " << i
               << " (mu_i = " << mi << ", d = " << out.d << ")";
            throw invalid_configuration_error(os.str());
        }
        out.mu_i.push_back(mi);
        out.d_i.push_back(std::sqrt(di2));
    }

    for (std::size_t i = 0; i < out.centers.size(); ++i) {
        for (std::size_t j = i + 1; j < out.centers.size(); ++j)
            if (dom.dist(out.centers[i], out.centers[j]) <= out.d_i[i] + out.d_i[j])
                throw invalid_configuration_error("bubble params: cutoff balls overlap");
        for (const Vec2& p : cfg.points)
            if (dom.dist(out.centers[i], p) <= out.d_i[i])
                throw invalid_configuration_error(
                    "bubble params: cutoff ball contains a vortex point");
    }
    return out;
}

double bubble(const TorusDomain& dom, Vec2 x_i, double mu_i, Vec2 y) {
    double r2 = dom.delta(y, x_i).norm2();
    return std::log(8.0 * mu_i * mu_i) - 2.0 * std::log1p(mu_i * mu_i * r2);
}

std::vector<double> rho_weights(const VortexConfig& cfg, const GreenEvaluator& g,
                                const std::vector<Vec2>& centers) {
    std::vector<double> out(centers.size());
    double gd = g.gamma_diag();
    for (std::size_t i = 0; i < centers.size(); ++i) {
        double expo = 8.0 * kPi * gd + g.u0(cfg, centers[i]);
        for (std::size_t j = 0; j < centers.size(); ++j) {
            if (j == i) continue;
            expo += 8.0 * kPi * g.green(centers[j], centers[i]);
        }
        out[i] = std::exp(expo);
    }
    return out;
}

double w_star_term(const BubbleParams& p, const GreenEvaluator& g, int i, Vec2 y) {
    const TorusDomain& dom = g.domain();
    double mi = p.mu_i[i], di = p.d_i[i];
    double s = 1.0 / (p.d * mi * mi);
    double r = dom.dist(y, p.centers[i]);
    if (r < di) {
        return bubble(dom, p.centers[i], mi, y) + 8.0 * kPi * g.gamma(y, p.centers[i]) * (1.0 - s);
    }
    double boundary = std::log(8.0 / (mi * mi * p.d * p.d)); // bubble profile at radius d_i
    return boundary +
           8.0 * kPi * (g.green(y, p.centers[i]) + std::log(di) / (2.0 * kPi)) * (1.0 - s);
}

double w_star(const BubbleParams& p, const GreenEvaluator& g, Vec2 y) {
    double acc = 0.0;
    for (int i = 0; i < p.k(); ++i) acc += w_star_term(p, g, i, y);
    return acc;
}

double lap_w_star(const BubbleParams& p, const TorusDomain& dom, Vec2 y) {
    double acc = 0.0;
    for (int i = 0; i < p.k(); ++i) {
        double mi = p.mu_i[i];
        double s = 1.0 / (p.d * mi * mi);
        acc += 8.0 * kPi * (1.0 - s) / dom.area();
        double r2 = dom.delta(y, p.centers[i]).norm2();
        if (r2 < p.d_i[i] * p.d_i[i]) {
            double den = 1.0 + mi * mi * r2;
            acc -= 8.0 * mi * mi / (den * den);
        }
    }
    return acc;
}

AnsatzIntegrals ansatz_integrals(const BubbleParams& p, const GreenEvaluator& g,
                                 const VortexConfig& cfg, int n_theta) {
    const TorusDomain& dom = g.domain();
    AnsatzIntegrals I;

    double wsum = 0.0;
    std::vector<StarCell> cells;
    for (int i = 0; i < p.k(); ++i) cells.push_back(voronoi_cell(dom, p.centers, i));

    for (int i = 0; i < p.k(); ++i) {
        wsum += integrate_cell(
            cells[i], [&](Vec2 y) { return w_star(p, g, y); }, n_theta, p.d_i[i]);
    }
    I.mean_w_star = wsum / dom.area();

    for (int i = 0; i < p.k(); ++i) {
        auto f = [&](Vec2 y) -> std::vector<double> {
            double e = g.u0(cfg, y) + w_star(p, g, y) - I.mean_w_star;
            double m1 = std::exp(e);
            return {m1, m1 * m1};
        };
        std::vector<double> m = integrate_cell_multi(cells[i], f, 2, n_theta, p.d_i[i]);
        I.mass1 += m[0];
        I.mass2 += m[1];
    }
    return I;
}

double c_from_integrals(const AnsatzIntegrals& I, int k, double eps) {
    if (!(eps > 0.0)) throw invalid_configuration_error("matching constant: eps must be positive");
    double disc = 1.0 - 32.0 * k * kPi * eps * eps * I.mass2 / (I.mass1 * I.mass1);
    if (disc < 0.0) {
        std::ostringstream os;
        os << "matching constant: negative discriminant " << disc
           << " (eps too large for this mu)";
        throw ansatz_infeasible_error(os.str());
    }
    return std::log(16.0 * k * kPi * eps * eps / (I.mass1 * (1.0 + std::sqrt(disc))));
}

double c_of_w(const BubbleParams& p, const GreenEvaluator& g, const VortexConfig& cfg) {
    return c_from_integrals(ansatz_integrals(p, g, cfg), p.k(), p.eps);
}

double bubble_mass(const BubbleParams& p, const GreenEvaluator& g, const VortexConfig& cfg,
                   int i, int n_theta) {
    return integrate_disk(
        p.centers[i], p.d_i[i],
        [&](Vec2 y) { return std::exp(g.u0(cfg, y) + w_star(p, g, y)); }, n_theta);
}

AnsatzField build_ansatz(const BubbleParams& p, const GreenEvaluator& g, const VortexConfig& cfg,
                         const TorusDomain& grid) {
    AnsatzIntegrals I = ansatz_integrals(p, g, cfg);
    double c = c_from_integrals(I, p.k(), p.eps);

    AnsatzField a;
    a.params = p;
    a.c_value = c;
    a.mean_w_star = I.mean_w_star;
    a.mass1 = I.mass1;
    a.mass2 = I.mass2;
    a.u0 = g.u0_field(cfg, grid);

    a.components.assign(p.k(), Field(grid));
    for (int i = 0; i < p.k(); ++i) {
        Field& comp = a.components[i];
        parallel_for(grid.n, [&](int iy) {
            for (int ix = 0; ix < grid.n; ++ix)
                comp.at(ix, iy) = w_star_term(p, g, i, grid.node(ix, iy));
        });
    }

    a.W_tilde = Field(grid, c - I.mean_w_star);
    for (const Field& comp : a.components) a.W_tilde += comp;

    a.lap_W_tilde = Field(grid);
    parallel_for(grid.n, [&](int iy) {
        for (int ix = 0; ix < grid.n; ++ix)
            a.lap_W_tilde.at(ix, iy) = lap_w_star(p, grid, grid.node(ix, iy));
    });
    return a;
}

Field candidate_u(const AnsatzField& a, const Field& eta) {
    if (eta.domain != a.W_tilde.domain)
        throw invalid_configuration_error("candidate_u: eta grid mismatch");
    Field u = a.W_tilde;
    double worst = 0.0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        double v = 1.0 + a.u0.values[i] + a.W_tilde.values[i] + eta.values[i];
        if (v > 0.0) {
            worst = std::max(worst, v);
            v = 0.0;
        }
        u.values[i] = v;
    }
    if (worst > 1e-10) {
        std::ostringstream os;
        os << "candidate_u: positive excursion " << worst << " leaves the branch u <= 0";
        throw out_of_branch_error(os.str());
    }
    return u;
}

Field candidate_u(const AnsatzField& a) { return candidate_u(a, Field(a.W_tilde.domain)); }

} // namespace csvl
