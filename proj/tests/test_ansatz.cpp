#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "csvl/ansatz.hpp"
#include "csvl/green.hpp"
#include "csvl/quadrature.hpp"

using namespace csvl;
constexpr double pi = std::numbers::pi;

namespace {

struct Fixture1 {
    TorusDomain dom = make_domain(1.0, 1.0, 64);
    GreenEvaluator g{dom};
    VortexConfig cfg = make_vortex_config(dom, {{0.25, 0.5}, {0.75, 0.5}});
    Vec2 center{0.5, 0.0};
};

struct Fixture2 {
    TorusDomain dom = make_domain(1.0, 1.0, 64);
    GreenEvaluator g{dom};
    VortexConfig cfg = make_vortex_config(
        dom, {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}});
    std::vector<Vec2> centers{{0.5, 0.25}, {0.5, 0.75}};
};

} // namespace

TEST_CASE("voronoi cells tile the torus") {
    TorusDomain dom = make_domain(1.0, 1.0, 16);
    std::vector<Vec2> centers{{0.2, 0.3}, {0.7, 0.8}};
    double area = 0.0;
    for (int i = 0; i < 2; ++i) {
        StarCell cell = voronoi_cell(dom, centers, i);
        CHECK(cell.inradius() > 0.1);
        area += integrate_cell(cell, [](Vec2) { return 1.0; }, 64);
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-10));

    // A smooth periodic integrand splits across the cells.
    auto f = [](Vec2 p) { return 1.0 + std::sin(2.0 * pi * p.x) * std::cos(2.0 * pi * p.y); };
    double s = 0.0;
    for (int i = 0; i < 2; ++i)
        s += integrate_cell(voronoi_cell(dom, centers, i), f, 64);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("liouville profile: peak value, field equation, total mass") {
    TorusDomain dom = make_domain(1.0, 1.0, 16);
    double mu = 5.0;
    Vec2 c{0.5, 0.5};
    CHECK(bubble(dom, c, mu, c) == doctest::Approx(std::log(8.0 * mu * mu)).epsilon(1e-14));

    // -Lap u = e^u pointwise via five-point stencil.
    double h = 1e-4;
    for (Vec2 y : {Vec2{0.55, 0.5}, Vec2{0.52, 0.47}, Vec2{0.61, 0.58}}) {
        double lap = (bubble(dom, c, mu, {y.x + h, y.y}) + bubble(dom, c, mu, {y.x - h, y.y}) +
                      bubble(dom, c, mu, {y.x, y.y + h}) + bubble(dom, c, mu, {y.x, y.y - h}) -
                      4.0 * bubble(dom, c, mu, y)) /
                     (h * h);
        double rhs = std::exp(bubble(dom, c, mu, y));
        CHECK(std::abs(-lap - rhs) / rhs < 1e-6);
    }

    // Planar mass: 2 pi int_0^R e^{u} r dr + analytic tail = 8 pi.
    double R = 0.45;
    double inner = 2.0 * pi *
                   radial_integral(
                       [mu](double r) {
                           return 8.0 * mu * mu / std::pow(1.0 + mu * mu * r * r, 2);
                       },
                       R);
    double tail = 8.0 * pi / (1.0 + mu * mu * R * R);
    CHECK(inner + tail == doctest::Approx(8.0 * pi).epsilon(1e-10));
}

TEST_CASE("interaction weights: single-bubble formula and symmetry") {
    Fixture1 fx;
    std::vector<double> r1 = rho_weights(fx.cfg, fx.g, {fx.center});
    double expect =
        std::exp(8.0 * pi * fx.g.gamma_diag() + fx.g.u0(fx.cfg, fx.center));
    CHECK(r1[0] == doctest::Approx(expect).epsilon(1e-12));

    Fixture2 fx2;
    std::vector<double> r2 = rho_weights(fx2.cfg, fx2.g, fx2.centers);
    CHECK(r2[0] == doctest::Approx(r2[1]).epsilon(1e-10));
    std::vector<Vec2> swapped{fx2.centers[1], fx2.centers[0]};
    std::vector<double> r2s = rho_weights(fx2.cfg, fx2.g, swapped);
    CHECK(r2s[0] == doctest::Approx(r2[1]).epsilon(1e-13));
    CHECK(r2s[1] == doctest::Approx(r2[0]).epsilon(1e-13));
}

TEST_CASE("matched profile is continuous across the cutoff circle") {
    Fixture1 fx;
    BubbleParams p = make_bubble_params(fx.g, fx.cfg, {fx.center}, 16.0, 1.0 / 256.0);
    double di = p.d_i[0], mi = p.mu_i[0];
    double s = 1.0 / (p.d * mi * mi);
    double worst = 0.0, worst_d1 = 0.0;
    for (int a = 0; a < 64; ++a) {
        double th = 2.0 * pi * a / 64.0;
        Vec2 w{std::cos(th), std::sin(th)};
        Vec2 y{fx.center.x + di * w.x, fx.center.y + di * w.y};
        double inner = bubble(fx.dom, fx.center, mi, y) +
                       8.0 * pi * fx.g.gamma(y, fx.center) * (1.0 - s);
        double outer = std::log(8.0 / (mi * mi * p.d * p.d)) +
                       8.0 * pi * (fx.g.green(y, fx.center) + std::log(di) / (2.0 * pi)) *
                           (1.0 - s);
        worst = std::max(worst, std::abs(inner - outer));
        // C1 matching: one-sided radial differences agree.
        double h = 1e-6;
        Vec2 yp{fx.center.x + (di + h) * w.x, fx.center.y + (di + h) * w.y};
        Vec2 ym{fx.center.x + (di - h) * w.x, fx.center.y + (di - h) * w.y};
        double d_out = (w_star_term(p, fx.g, 0, yp) - w_star_term(p, fx.g, 0, y)) / h;
        double d_in = (w_star_term(p, fx.g, 0, y) - w_star_term(p, fx.g, 0, ym)) / h;
        worst_d1 = std::max(worst_d1, std::abs(d_out - d_in));
    }
    CHECK(worst < 1e-9);
    CHECK(worst_d1 < 1e-3); // one-sided O(h) differences, h = 1e-6, |w''| = O(mu^2)
}

TEST_CASE("far field level is minus 2k ln mu up to a constant") {
    Fixture1 fx;
    for (double mu : {16.0, 64.0}) {
        BubbleParams p = make_bubble_params(fx.g, fx.cfg, {fx.center}, mu, 1.0 / (mu * mu));
        double v = w_star(p, fx.g, {0.0, 0.5}); // far from the bubble
        CHECK(std::abs(v + 2.0 * std::log(mu)) < 10.0);
    }
}

TEST_CASE("analytic laplacian of the matched profile") {
    Fixture1 fx;
    BubbleParams p = make_bubble_params(fx.g, fx.cfg, {fx.center}, 16.0, 1.0 / 256.0);
    double h = 1e-4;
    // One point inside the cutoff ball, one outside, both away from the
    // kink circle and the vortex points.
    for (Vec2 y : {Vec2{fx.center.x + 0.4 * p.d_i[0], fx.center.y},
                   Vec2{fx.center.x + 0.07, fx.center.y + 0.31}}) {
        double fd = (w_star(p, fx.g, {y.x + h, y.y}) + w_star(p, fx.g, {y.x - h, y.y}) +
                     w_star(p, fx.g, {y.x, y.y + h}) + w_star(p, fx.g, {y.x, y.y - h}) -
                     4.0 * w_star(p, fx.g, y)) /
                    (h * h);
        double an = lap_w_star(p, fx.dom, y);
        CHECK(an == doctest::Approx(fd).epsilon(5e-4));
    }
}

TEST_CASE("matching constant scaling and mean removal") {
    Fixture1 fx;
    std::vector<double> band, mean_band;
    for (double mu : {8.0, 16.0, 32.0}) {
        BubbleParams p =
            make_bubble_params(fx.g, fx.cfg, {fx.center}, mu, 1.0 / (mu * mu), 0.1);
        AnsatzIntegrals I = ansatz_integrals(p, fx.g, fx.cfg, 128);
        double c = c_from_integrals(I, p.k(), p.eps);
        band.push_back(c + 6.0 * std::log(mu));
        // Mean removal magnitude: -mean(w*_i) = 2 ln mu_i + O(1).
        mean_band.push_back(-I.mean_w_star - 2.0 * std::log(p.mu_i[0]));
        CHECK(std::abs(mean_band.back()) < 10.0);
    }
    double spread = *std::max_element(band.begin(), band.end()) -
                    *std::min_element(band.begin(), band.end());
    CHECK(spread < 1.5);
    double mspread = *std::max_element(mean_band.begin(), mean_band.end()) -
                     *std::min_element(mean_band.begin(), mean_band.end());
    CHECK(mspread < 1.5);
}

TEST_CASE("infeasible matching constant for large eps") {
    Fixture1 fx;
    BubbleParams p = make_bubble_params(fx.g, fx.cfg, {fx.center}, 10.0, 10.0, 0.02);
    CHECK(!p.mu_in_window());
    CHECK_THROWS_AS(c_of_w(p, fx.g, fx.cfg), ansatz_infeasible_error);
}

TEST_CASE("local and global masses approach the bubble quanta") {
    Fixture1 fx;
    // A generous cutoff base keeps the O(1/(d mu^2)) defect in the linear
    // regime already at mu = 8; the single cutoff ball may be this large
    // because it only has the two vortex points to avoid.
    double prev2 = 1e300, prev3 = 1e300;
    for (double mu : {8.0, 16.0, 32.0}) {
        BubbleParams p =
            make_bubble_params(fx.g, fx.cfg, {fx.center}, mu, 1.0 / (mu * mu), 0.2);
        AnsatzIntegrals I = ansatz_integrals(p, fx.g, fx.cfg, 128);
        double denom = p.rho[0]; // k = 1: 8^{k-1} rho_1 / prod = rho_1
        double est2 = bubble_mass(p, fx.g, fx.cfg, 0) / (denom * 8.0 * pi);
        double est3 = I.mass1 * std::exp(I.mean_w_star) / (denom * 8.0 * pi);
        CHECK(std::abs(est2 - 1.0) < prev2);
        CHECK(std::abs(est3 - 1.0) < prev3);
        prev2 = std::abs(est2 - 1.0);
        prev3 = std::abs(est3 - 1.0);
    }
    CHECK(prev2 < 0.06);
    CHECK(prev3 < 0.06);
}

TEST_CASE("assembled correction and branch guard") {
    Fixture1 fx;
    double mu = 16.0;
    BubbleParams p = make_bubble_params(fx.g, fx.cfg, {fx.center}, mu, 1.0 / (mu * mu));
    AnsatzField a = build_ansatz(p, fx.g, fx.cfg, fx.dom);

    // Pointwise identity W-tilde = sum_i w*_i - mean + c.
    double worst = 0.0;
    for (int iy = 0; iy < fx.dom.n; iy += 7) {
        for (int ix = 0; ix < fx.dom.n; ix += 7) {
            double s = a.c_value - a.mean_w_star;
            for (const Field& comp : a.components) s += comp.at(ix, iy);
            worst = std::max(worst, std::abs(a.W_tilde.at(ix, iy) - s));
        }
    }
    CHECK(worst < 1e-12);

    Field u = candidate_u(a);
    CHECK(u.max() <= 0.0);
    CHECK(u.all_finite());

    Field push(fx.dom, 10.0);
    CHECK_THROWS_AS(candidate_u(a, push), out_of_branch_error);

    // Analytic laplacian field matches the pointwise formula.
    CHECK(a.lap_W_tilde.at(3, 11) ==
          doctest::Approx(lap_w_star(p, fx.dom, fx.dom.node(3, 11))).epsilon(1e-14));
}

TEST_CASE("two-bubble configuration stays admissible") {
    Fixture2 fx;
    double mu = 16.0;
    BubbleParams p =
        make_bubble_params(fx.g, fx.cfg, fx.centers, mu, 1.0 / (mu * mu));
    CHECK(p.mu_i[0] == doctest::Approx(mu));
    CHECK(p.mu_i[1] == doctest::Approx(mu).epsilon(1e-8)); // rho_1 = rho_2 by symmetry
    CHECK(p.d_i[0] > 0.0);

    // Cutoff balls must miss each other and the vortex points.
    CHECK_THROWS_AS(
        make_bubble_params(fx.g, fx.cfg, {{0.26, 0.25}, {0.5, 0.75}}, mu, 1.0 / (mu * mu)),
        invalid_configuration_error);
}
