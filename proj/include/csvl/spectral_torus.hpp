#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "csvl/errors.hpp"
#include "csvl/geometry.hpp"

namespace csvl {

/// Flat rectangular torus with a uniform n-by-n tensor grid.
///
/// Grid nodes sit at ((i + offset.x) * L1/n, (j + offset.y) * L2/n); the
/// default half-cell offset keeps nodes away from vortex points placed on
/// the unshifted lattice.
struct TorusDomain {
    double L1 = 1.0;
    double L2 = 1.0;
    int n = 64;
    Vec2 offset{0.5, 0.5};

    double area() const { return L1 * L2; }
    double h1() const { return L1 / n; }
    double h2() const { return L2 / n; }
    std::size_t num_nodes() const { return static_cast<std::size_t>(n) * n; }

    Vec2 node(int ix, int iy) const {
        return {(ix + offset.x) * h1(), (iy + offset.y) * h2()};
    }

    // Nearest-image displacement a - b on the torus.
    Vec2 delta(const Vec2& a, const Vec2& b) const {
        return {wrap_centered(a.x - b.x, L1), wrap_centered(a.y - b.y, L2)};
    }
    double dist(const Vec2& a, const Vec2& b) const { return delta(a, b).norm(); }

    bool operator==(const TorusDomain&) const = default;
};

TorusDomain make_domain(double L1, double L2, int n, Vec2 offset = {0.5, 0.5});

/// Real scalar field sampled on the domain grid, row-major with the
/// x index fastest: values[iy * n + ix].
struct Field {
    TorusDomain domain;
    std::vector<double> values;
    std::optional<double> declared_mean;

    Field() = default;
    explicit Field(const TorusDomain& dom, double fill = 0.0)
        : domain(dom), values(dom.num_nodes(), fill) {}

    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * domain.n + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * domain.n + ix]; }

    std::size_t size() const { return values.size(); }

    double max() const;
    double min() const;
    double sup_abs() const;
    bool all_finite() const;

    // Checks the declared_mean invariant; throws invalid_configuration_error
    // on violation. No-op when declared_mean is absent.
    void check_declared_mean() const;
};

// Samples f at every grid node.
Field sample(const TorusDomain& dom, const std::function<double(Vec2)>& f);

// Pointwise lifts.
Field map(const Field& f, const std::function<double(double)>& op);
Field zip(const Field& a, const Field& b, const std::function<double(double, double)>& op);

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);
Field& operator+=(Field& a, const Field& b);

// Area-weighted trapezoidal sum; exact on trigonometric polynomials of
// degree below n.
double integrate(const Field& f);
double mean(const Field& f);

// L2 inner product over the torus.
double inner(const Field& a, const Field& b);
double norm_l2(const Field& f);

// Spectral (Fourier-symbol) Laplacian. Output mean is zero to rounding.
Field laplacian(const Field& f);

// Inverts the Laplacian on mean-zero data. Requires |mean(rhs)| below
// tol_mean (default 1e-10 * sup|rhs|); the returned field has mean zero.
Field poisson_solve(const Field& rhs, std::optional<double> tol_mean = std::nullopt);

// Solves (Laplacian - shift) phi = rhs for shift > 0.
Field helmholtz_solve(const Field& rhs, double shift);

} // namespace csvl
