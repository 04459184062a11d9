#include "csvl/green.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "csvl/parallel.hpp"
#include "csvl/quadrature.hpp"

namespace csvl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.5772156649015328606;

// E1(z) for z > 0.
double exp_int_e1(double z) {
    if (z > 700.0) return 0.0;
    return -std::expint(-z);
}

// E1(z) + ln z, smooth through z = 0 (value -gamma_E at 0).
double exp_int_e1_plus_log(double z) {
    if (z < 0.5) {
        // Σ_{n>=1} (-1)^{n+1} z^n / (n n!) - gamma_E
        double s = -kEulerGamma, term = 1.0;
        for (int n = 1; n <= 24; ++n) {
            term *= -z / n;
            s -= term / n;
            if (std::abs(term) < 1e-18) break;
        }
        return s;
    }
    return exp_int_e1(z) + std::log(z);
}

// (1 - e^-z)/z, value 1 at 0.
double q1(double z) {
    if (std::abs(z) < 1e-12) return 1.0 - 0.5 * z;
    return -std::expm1(-z) / z;
}

// (e^-z (1+z) - 1)/z^2, value -1/2 at 0.
double q2(double z) {
    if (z < 0.3) {
        return -0.5 + z / 3.0 - z * z / 8.0 + z * z * z / 30.0 - z * z * z * z / 144.0;
    }
    return (std::exp(-z) * (1.0 + z) - 1.0) / (z * z);
}

} // namespace

VortexConfig make_vortex_config(const TorusDomain& dom, std::vector<Vec2> points,
                                std::vector<int> multiplicities) {
    if (multiplicities.empty()) multiplicities.assign(points.size(), 1);
    if (multiplicities.size() != points.size())
        throw invalid_configuration_error("vortex config: multiplicity count mismatch");
    VortexConfig cfg;
    cfg.points.reserve(points.size());
    for (Vec2 p : points)
        cfg.points.push_back({wrap_positive(p.x, dom.L1), wrap_positive(p.y, dom.L2)});
    cfg.multiplicities = std::move(multiplicities);
    for (std::size_t i = 0; i < cfg.points.size(); ++i) {
        if (cfg.multiplicities[i] < 1)
            throw invalid_configuration_error("vortex config: multiplicities must be positive");
        for (std::size_t j = i + 1; j < cfg.points.size(); ++j)
            if (dom.dist(cfg.points[i], cfg.points[j]) < 1e-12)
                throw invalid_configuration_error("vortex config: coincident vortex points");
        cfg.N += cfg.multiplicities[i];
    }
    if (cfg.N % 2 != 0)
        throw invalid_configuration_error("vortex config: total vortex number N must be even");
    cfg.k = cfg.N / 2;
    return cfg;
}

GreenEvaluator::GreenEvaluator(const TorusDomain& dom, double ewald_split, int fourier_cutoff,
                               int real_cutoff)
    : dom_(dom) {
    double minL = std::min(dom.L1, dom.L2);
    sigma_ = (ewald_split > 0.0) ? ewald_split : 0.12 * minL;
    a_ = 4.0 * sigma_ * sigma_;

    // Short-range sum reaches where E1 has decayed below 1e-19.
    double r_cut = sigma_ * std::sqrt(4.0 * 45.0);
    int M1r = real_cutoff > 0 ? real_cutoff
                              : static_cast<int>(std::ceil((r_cut + 0.5 * dom.L1) / dom.L1));
    int M2r = real_cutoff > 0 ? real_cutoff
                              : static_cast<int>(std::ceil((r_cut + 0.5 * dom.L2) / dom.L2));
    real_cutoff_ = std::max(M1r, M2r);
    for (int m1 = -M1r; m1 <= M1r; ++m1)
        for (int m2 = -M2r; m2 <= M2r; ++m2) images_.push_back({m1 * dom.L1, m2 * dom.L2});

    // Fourier tail: Gaussian damping below 1e-19 at the cutoff.
    double k_cut = std::sqrt(45.0) / sigma_;
    int M1 = fourier_cutoff > 0 ? fourier_cutoff
                                : static_cast<int>(std::ceil(k_cut * dom.L1 / (2.0 * kPi)));
    int M2 = fourier_cutoff > 0 ? fourier_cutoff
                                : static_cast<int>(std::ceil(k_cut * dom.L2 / (2.0 * kPi)));
    fourier_cutoff_ = std::max(M1, M2);
    for (int m1 = -M1; m1 <= M1; ++m1) {
        for (int m2 = -M2; m2 <= M2; ++m2) {
            if (m1 == 0 && m2 == 0) continue;
            double kx = 2.0 * kPi * m1 / dom.L1;
            double ky = 2.0 * kPi * m2 / dom.L2;
            double k2 = kx * kx + ky * ky;
            double c = std::exp(-sigma_ * sigma_ * k2) / (dom.area() * k2);
            if (c < 1e-20) continue;
            kx_.push_back(kx);
            ky_.push_back(ky);
            coef_.push_back(c);
        }
    }

    background_ = -sigma_ * sigma_ / dom.area();
}

GreenEvaluator::Eval GreenEvaluator::evaluate(Vec2 r, bool regularized, bool want_derivs) const {
    Eval e{background_, {0.0, 0.0}, {{{0.0, 0.0}, {0.0, 0.0}}}};

    const double inv4pi = 1.0 / (4.0 * kPi);
    for (const Vec2& R : images_) {
        Vec2 rho = r + R;
        double s = rho.norm2();
        bool primary = regularized && (R.x == 0.0 && R.y == 0.0);
        double z = s / a_;
        if (primary) {
            e.value += inv4pi * (exp_int_e1_plus_log(z) + std::log(a_));
            if (want_derivs) {
                double w1 = q1(z), w2 = q2(z);
                e.grad += (w1 / (2.0 * kPi * a_)) * rho;
                double diag = w1 / (2.0 * kPi * a_);
                double outer = w2 / (kPi * a_ * a_);
                e.hess[0][0] += diag + outer * rho.x * rho.x;
                e.hess[0][1] += outer * rho.x * rho.y;
                e.hess[1][0] += outer * rho.x * rho.y;
                e.hess[1][1] += diag + outer * rho.y * rho.y;
            }
        } else {
            if (z > 55.0) continue;
            e.value += inv4pi * exp_int_e1(z);
            if (want_derivs) {
                double ez = std::exp(-z);
                double gfac = -ez / (2.0 * kPi * s);
                e.grad += gfac * rho;
                // Hess = 2 phi' I + 4 phi'' rho rho^T with
                // phi' = -e^-z/(4 pi s), phi'' = e^-z (1/(a s) + 1/s^2)/(4 pi).
                double d1 = -ez / (4.0 * kPi * s);
                double d2 = ez * (1.0 / (a_ * s) + 1.0 / (s * s)) * inv4pi;
                e.hess[0][0] += 2.0 * d1 + 4.0 * d2 * rho.x * rho.x;
                e.hess[0][1] += 4.0 * d2 * rho.x * rho.y;
                e.hess[1][0] += 4.0 * d2 * rho.x * rho.y;
                e.hess[1][1] += 2.0 * d1 + 4.0 * d2 * rho.y * rho.y;
            }
        }
    }

    for (std::size_t i = 0; i < coef_.size(); ++i) {
        double ph = kx_[i] * r.x + ky_[i] * r.y;
        double c = coef_[i];
        double cv = std::cos(ph);
        e.value += c * cv;
        if (want_derivs) {
            double sv = std::sin(ph);
            e.grad.x -= c * sv * kx_[i];
            e.grad.y -= c * sv * ky_[i];
            e.hess[0][0] -= c * cv * kx_[i] * kx_[i];
            e.hess[0][1] -= c * cv * kx_[i] * ky_[i];
            e.hess[1][0] -= c * cv * kx_[i] * ky_[i];
            e.hess[1][1] -= c * cv * ky_[i] * ky_[i];
        }
    }
    return e;
}

double GreenEvaluator::green(Vec2 x, Vec2 y) const {
    Vec2 r = dom_.delta(x, y);
    double d = r.norm();
    if (d < 1e-12 * std::min(dom_.L1, dom_.L2))
        throw singular_point_error("green: evaluation on the diagonal; use gamma");
    return evaluate(r, true, false).value - std::log(d) / (2.0 * kPi);
}

double GreenEvaluator::gamma(Vec2 x, Vec2 y) const {
    return evaluate(dom_.delta(x, y), true, false).value;
}

double GreenEvaluator::gamma_diag() const { return evaluate({0.0, 0.0}, true, false).value; }

Vec2 GreenEvaluator::grad_green(Vec2 x, Vec2 y) const {
    Vec2 r = dom_.delta(x, y);
    double s = r.norm2();
    if (s < 1e-24) throw singular_point_error("grad_green: evaluation on the diagonal");
    Vec2 g = evaluate(r, true, true).grad;
    // Subtract grad of (1/2pi) ln|r|.
    return g - (1.0 / (2.0 * kPi * s)) * r;
}

Vec2 GreenEvaluator::grad_gamma(Vec2 x, Vec2 y) const {
    return evaluate(dom_.delta(x, y), true, true).grad;
}

Mat2 GreenEvaluator::hess_green(Vec2 x, Vec2 y) const {
    Vec2 r = dom_.delta(x, y);
    double s = r.norm2();
    if (s < 1e-24) throw singular_point_error("hess_green: evaluation on the diagonal");
    Mat2 h = evaluate(r, true, true).hess;
    // Hessian of (1/2pi) ln|r| = (1/2pi)(I/s - 2 rho rho^T / s^2).
    double diag = 1.0 / (2.0 * kPi * s);
    double outer = -1.0 / (kPi * s * s);
    h[0][0] -= diag + outer * r.x * r.x;
    h[0][1] -= outer * r.x * r.y;
    h[1][0] -= outer * r.x * r.y;
    h[1][1] -= diag + outer * r.y * r.y;
    return h;
}

Mat2 GreenEvaluator::hess_gamma(Vec2 x, Vec2 y) const {
    return evaluate(dom_.delta(x, y), true, true).hess;
}

double GreenEvaluator::u0(const VortexConfig& cfg, Vec2 x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < cfg.points.size(); ++j)
        s += cfg.multiplicities[j] * green(x, cfg.points[j]);
    return -4.0 * kPi * s;
}

Vec2 GreenEvaluator::grad_u0(const VortexConfig& cfg, Vec2 x) const {
    Vec2 s{0.0, 0.0};
    for (std::size_t j = 0; j < cfg.points.size(); ++j)
        s += static_cast<double>(cfg.multiplicities[j]) * grad_green(x, cfg.points[j]);
    return -4.0 * kPi * s;
}

Mat2 GreenEvaluator::hess_u0(const VortexConfig& cfg, Vec2 x) const {
    Mat2 acc{{{0.0, 0.0}, {0.0, 0.0}}};
    for (std::size_t j = 0; j < cfg.points.size(); ++j) {
        Mat2 h = hess_green(x, cfg.points[j]);
        double m = cfg.multiplicities[j];
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) acc[a][b] += m * h[a][b];
    }
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) acc[a][b] *= -4.0 * kPi;
    return acc;
}

Field GreenEvaluator::u0_field(const VortexConfig& cfg, const TorusDomain& grid) const {
    double min_dist = 1e300;
    for (const Vec2& p : cfg.points) {
        // Nearest node distance; the offset must keep nodes off vortices.
        double gx = wrap_positive(p.x / grid.h1() - grid.offset.x, grid.n);
        double gy = wrap_positive(p.y / grid.h2() - grid.offset.y, grid.n);
        double dx = std::abs(wrap_centered(gx, 1.0)) * grid.h1();
        double dy = std::abs(wrap_centered(gy, 1.0)) * grid.h2();
        min_dist = std::min(min_dist, std::hypot(dx, dy));
    }
    if (!cfg.points.empty() && min_dist < 1e-9 * std::min(grid.L1, grid.L2))
        throw invalid_configuration_error(
            "u0_field: a grid node coincides with a vortex point; shift the grid offset");

    Field out(grid);
    parallel_for(grid.n, [&](int iy) {
        for (int ix = 0; ix < grid.n; ++ix) out.at(ix, iy) = u0(cfg, grid.node(ix, iy));
    });
    return out;
}

double GreenEvaluator::mean_of_column(Vec2 y, int n) const {
    const double Rc = 0.49 * std::min(dom_.L1, dom_.L2);
    TorusDomain grid = make_domain(dom_.L1, dom_.L2, n, dom_.offset);

    // h = G + (1/2pi) chi(r/Rc) ln r is smooth on the whole torus:
    // near the diagonal it equals gamma plus a C4-flat correction, and the
    // cutoff vanishes before the nearest-image distance develops kinks.
    double acc = 0.0;
    for (int iy = 0; iy < n; ++iy) {
        for (int ix = 0; ix < n; ++ix) {
            Vec2 x = grid.node(ix, iy);
            double r = dom_.dist(x, y);
            double h;
            if (r < 1e-14) {
                h = gamma_diag();
            } else {
                double chi = smoothstep_c4(r / Rc);
                h = gamma(x, y) + (chi - 1.0) * std::log(r) / (2.0 * kPi);
            }
            acc += h;
        }
    }
    double mean_h = acc / (static_cast<double>(n) * n);

    double patch = radial_integral(
        [Rc](double r) { return smoothstep_c4(r / Rc) * std::log(r); }, Rc, 48, 32);
    return mean_h - patch / dom_.area();
}

} // namespace csvl
