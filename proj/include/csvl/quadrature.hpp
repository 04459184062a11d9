#pragma once

#include <functional>
#include <vector>

#include "csvl/geometry.hpp"

namespace csvl {

// Gauss-Legendre rule on [a, b]; npts in {8, 16, 32}.
double gauss_segment(const std::function<double(double)>& f, double a, double b, int npts = 16);

// Integral of f(r) r dr over [0, R] with geometric refinement toward 0 so
// that integrands peaked at any interior scale are resolved.
// levels controls the number of dyadic segments.
double radial_integral(const std::function<double(double)>& f, double R, int levels = 40,
                       int npts = 16);

// Same but over [r_in, R], r_in > 0.
double radial_integral_annulus(const std::function<double(double)>& f, double r_in, double R,
                               int levels = 30, int npts = 16);

// Trapezoidal rule over a full circle of radius r around c; n_theta even.
// Returns the integral of f over the circle against arc length / r, i.e.
// the mean times 2*pi. Exact for angular harmonics of order < n_theta.
double ring_mean(const std::function<double(Vec2)>& f, Vec2 c, double r, int n_theta = 64);

// C2 quintic smoothstep: 1 for t <= 0, 0 for t >= 1.
double smoothstep_quintic(double t);
// Its first and second derivatives in t.
double smoothstep_quintic_d1(double t);
double smoothstep_quintic_d2(double t);

// C4 (order-9 polynomial) smoothstep, same endpoints; used where
// quadrature accuracy of the cutoff matters.
double smoothstep_c4(double t);

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Star-shaped polygonal cell around a center, cut out by half-plane
/// constraints 2 (y - c)·v <= |v|^2; the Voronoi cell of a periodic point
/// set has exactly this form with v the displacements to the neighbors.
struct StarCell {
    Vec2 center;
    std::vector<Vec2> halfplanes;

    // Cell boundary distance in direction (cos theta, sin theta).
    double radius(double theta) const;
    // Largest disk around the center contained in the cell.
    double inradius() const;
    // Sorted polar angles of the polygon vertices; the boundary radius is
    // smooth between consecutive angles.
    std::vector<double> vertex_angles() const;
};

// Voronoi cell of centers[i] on the torus, with lattice-image neighbors.
StarCell voronoi_cell(const struct TorusDomain& dom, const std::vector<Vec2>& centers, int i);

// Integral of f over the cell in polar coordinates: trapezoid in theta,
// geometrically refined Gauss panels in r so integrand peaks near the
// center are resolved. r_split > 0 forces a panel break at that radius
// (used when the integrand has a kink on a circle).
double integrate_cell(const StarCell& cell, const std::function<double(Vec2)>& f,
                      int n_theta = 256, double r_split = 0.0, int levels = 24, int npts = 16);

// Several integrands sharing the evaluation points; returns one integral
// per component of f.
std::vector<double> integrate_cell_multi(const StarCell& cell,
                                         const std::function<std::vector<double>(Vec2)>& f,
                                         int dims, int n_theta = 256, double r_split = 0.0,
                                         int levels = 24, int npts = 16);

// Same quadrature over a plain disk.
double integrate_disk(Vec2 center, double R, const std::function<double(Vec2)>& f,
                      int n_theta = 128, int levels = 24, int npts = 16);

// Integral over the cell minus the disk of radius r_in around the center.
double integrate_cell_outside(const StarCell& cell, double r_in,
                              const std::function<double(Vec2)>& f, int n_theta = 256,
                              int levels = 24, int npts = 16);

} // namespace csvl
