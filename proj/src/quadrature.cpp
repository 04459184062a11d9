#include "csvl/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "csvl/parallel.hpp"
#include "csvl/spectral_torus.hpp"

namespace csvl {

namespace {

struct GaussRule {
    std::vector<double> x; // nodes on [-1, 1]
    std::vector<double> w;
};

// Newton iteration on Legendre polynomials; computed once per order.
GaussRule make_gauss(int npts) {
    GaussRule r;
    r.x.resize(npts);
    r.w.resize(npts);
    for (int i = 0; i < npts; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (npts + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= npts; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = npts * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= npts; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = npts * (x * p1 - p0) / (x * x - 1.0);
        r.x[i] = x;
        r.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

const GaussRule& gauss_rule(int npts) {
    static const GaussRule g8 = make_gauss(8);
    static const GaussRule g16 = make_gauss(16);
    static const GaussRule g32 = make_gauss(32);
    switch (npts) {
        case 8: return g8;
        case 16: return g16;
        case 32: return g32;
        default: throw std::invalid_argument("gauss_rule: npts must be 8, 16 or 32");
    }
}

} // namespace

double gauss_segment(const std::function<double(double)>& f, double a, double b, int npts) {
    const GaussRule& g = gauss_rule(npts);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < npts; ++i) s += g.w[i] * f(mid + half * g.x[i]);
    return s * half;
}

double radial_integral(const std::function<double(double)>& f, double R, int levels, int npts) {
    auto fr = [&f](double r) { return f(r) * r; };
    double s = 0.0;
    double hi = R;
    for (int m = 0; m < levels; ++m) {
        double lo = hi * 0.5;
        s += gauss_segment(fr, lo, hi, npts);
        hi = lo;
    }
    // Closing segment [0, hi]; the r weight tames the origin.
    s += gauss_segment(fr, 0.0, hi, npts);
    return s;
}

double radial_integral_annulus(const std::function<double(double)>& f, double r_in, double R,
                               int levels, int npts) {
    if (!(r_in > 0.0) || !(R > r_in)) throw std::invalid_argument("radial_integral_annulus: bad bounds");
    auto fr = [&f](double r) { return f(r) * r; };
    // Geometric mesh from r_in up to R, finer near r_in.
    double s = 0.0;
    double lo = r_in;
    for (int m = 0; m < levels && lo < R; ++m) {
        double hi = std::min(R, lo * 2.0);
        s += gauss_segment(fr, lo, hi, npts);
        lo = hi;
    }
    return s;
}

double ring_mean(const std::function<double(Vec2)>& f, Vec2 c, double r, int n_theta) {
    if (n_theta % 2 != 0) throw std::invalid_argument("ring_mean: n_theta must be even");
    double s = 0.0;
    for (int i = 0; i < n_theta; ++i) {
        double th = 2.0 * std::numbers::pi * i / n_theta;
        s += f({c.x + r * std::cos(th), c.y + r * std::sin(th)});
    }
    return s * (2.0 * std::numbers::pi / n_theta);
}

double smoothstep_quintic(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    // 1 - (10 t^3 - 15 t^4 + 6 t^5)
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

double smoothstep_quintic_d1(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return -(30.0 * t * t - 60.0 * t * t * t + 30.0 * t * t * t * t);
}

double smoothstep_quintic_d2(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return -(60.0 * t - 180.0 * t * t + 120.0 * t * t * t);
}

double smoothstep_c4(double t) {
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    double t5 = t * t * t * t * t;
    return 1.0 - t5 * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + 70.0 * t))));
}

double StarCell::radius(double theta) const {
    Vec2 w{std::cos(theta), std::sin(theta)};
    double r = 1e300;
    for (const Vec2& v : halfplanes) {
        double d = v.dot(w);
        if (d > 0.0) r = std::min(r, 0.5 * v.norm2() / d);
    }
    if (r >= 1e300) throw std::invalid_argument("StarCell::radius: unbounded cell");
    return r;
}

double StarCell::inradius() const {
    double r = 1e300;
    for (const Vec2& v : halfplanes) r = std::min(r, 0.5 * v.norm());
    return r;
}

std::vector<double> StarCell::vertex_angles() const {
    std::vector<double> angles;
    const std::size_t m = halfplanes.size();
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            const Vec2 &va = halfplanes[a], &vb = halfplanes[b];
            double det = va.x * vb.y - va.y * vb.x;
            if (std::abs(det) < 1e-14 * (va.norm() * vb.norm())) continue;
            double ra = 0.5 * va.norm2(), rb = 0.5 * vb.norm2();
            Vec2 q{(ra * vb.y - rb * va.y) / det, (rb * va.x - ra * vb.x) / det};
            bool inside = true;
            for (std::size_t c = 0; c < m && inside; ++c) {
                if (c == a || c == b) continue;
                const Vec2& vc = halfplanes[c];
                if (q.dot(vc) > 0.5 * vc.norm2() + 1e-12 * vc.norm2()) inside = false;
            }
            if (inside) angles.push_back(std::atan2(q.y, q.x));
        }
    }
    std::sort(angles.begin(), angles.end());
    // Deduplicate near-identical directions.
    std::vector<double> out;
    for (double a : angles)
        if (out.empty() || a - out.back() > 1e-10) out.push_back(a);
    return out;
}

StarCell voronoi_cell(const TorusDomain& dom, const std::vector<Vec2>& centers, int i) {
    StarCell cell;
    cell.center = centers[i];
    for (std::size_t j = 0; j < centers.size(); ++j) {
        Vec2 base = dom.delta(centers[j], centers[i]);
        for (int m1 = -1; m1 <= 1; ++m1) {
            for (int m2 = -1; m2 <= 1; ++m2) {
                Vec2 v{base.x + m1 * dom.L1, base.y + m2 * dom.L2};
                if (v.norm2() < 1e-24) continue; // the center itself
                cell.halfplanes.push_back(v);
            }
        }
    }
    return cell;
}

namespace {

// Vector-valued radial quadrature sharing one evaluation of f per node.
void radial_accumulate_multi(const std::function<std::vector<double>(Vec2)>& f, Vec2 c, Vec2 w,
                             double a, double b, int npts, std::vector<double>& acc) {
    const GaussRule& g = gauss_rule(npts);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < npts; ++i) {
        double r = mid + half * g.x[i];
        std::vector<double> v = f({c.x + r * w.x, c.y + r * w.y});
        double wt = g.w[i] * half * r;
        for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += wt * v[d];
    }
}

void radial_multi(const std::function<std::vector<double>(Vec2)>& f, Vec2 c, Vec2 w, double R,
                  int levels, int npts, std::vector<double>& acc) {
    double hi = R;
    for (int m = 0; m < levels; ++m) {
        double lo = hi * 0.5;
        radial_accumulate_multi(f, c, w, lo, hi, npts, acc);
        hi = lo;
    }
    radial_accumulate_multi(f, c, w, 0.0, hi, npts, acc);
}

void radial_multi_annulus(const std::function<std::vector<double>(Vec2)>& f, Vec2 c, Vec2 w,
                          double r_in, double R, int levels, int npts,
                          std::vector<double>& acc) {
    double lo = r_in;
    for (int m = 0; m < levels && lo < R; ++m) {
        double hi = std::min(R, lo * 2.0);
        radial_accumulate_multi(f, c, w, lo, hi, npts, acc);
        lo = hi;
    }
}

} // namespace

namespace {

struct ThetaNode {
    double theta;
    double weight;
};

// Gauss panels in theta, split at the polygon vertex angles so the
// boundary radius is smooth on every panel.
std::vector<ThetaNode> theta_nodes(const StarCell& cell, int n_theta, int npts) {
    const double twopi = 2.0 * std::numbers::pi;
    std::vector<double> ang = cell.vertex_angles();
    if (ang.size() < 3) {
        ang.clear();
        for (int i = 0; i < 8; ++i) ang.push_back(twopi * i / 8.0 - std::numbers::pi);
    }
    const GaussRule& g = gauss_rule(npts);
    std::vector<ThetaNode> nodes;
    for (std::size_t m = 0; m < ang.size(); ++m) {
        double a = ang[m];
        double b = (m + 1 < ang.size()) ? ang[m + 1] : ang[0] + twopi;
        double span = b - a;
        if (span <= 1e-12) continue;
        int panels = std::max(1, static_cast<int>(std::ceil(span / twopi * n_theta / npts)));
        for (int pnl = 0; pnl < panels; ++pnl) {
            double pa = a + span * pnl / panels, pb = a + span * (pnl + 1) / panels;
            double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
            for (int i = 0; i < npts; ++i)
                nodes.push_back({mid + half * g.x[i], half * g.w[i]});
        }
    }
    return nodes;
}

} // namespace

std::vector<double> integrate_cell_multi(const StarCell& cell,
                                         const std::function<std::vector<double>(Vec2)>& f,
                                         int dims, int n_theta, double r_split, int levels,
                                         int npts) {
    std::vector<ThetaNode> nodes = theta_nodes(cell, n_theta, npts);
    std::vector<std::vector<double>> per_node(nodes.size(), std::vector<double>(dims, 0.0));
    parallel_for(static_cast<int>(nodes.size()), [&](int it) {
        double theta = nodes[it].theta;
        Vec2 w{std::cos(theta), std::sin(theta)};
        double R = cell.radius(theta);
        std::vector<double>& acc = per_node[it];
        if (r_split > 0.0 && r_split < R) {
            radial_multi(f, cell.center, w, r_split, levels, npts, acc);
            radial_multi_annulus(f, cell.center, w, r_split, R, levels, npts, acc);
        } else {
            radial_multi(f, cell.center, w, R, levels, npts, acc);
        }
        for (double& v : acc) v *= nodes[it].weight;
    });
    std::vector<double> acc(dims, 0.0);
    for (const auto& row : per_node)
        for (int d = 0; d < dims; ++d) acc[d] += row[d];
    return acc;
}

double integrate_cell(const StarCell& cell, const std::function<double(Vec2)>& f, int n_theta,
                      double r_split, int levels, int npts) {
    auto wrap = [&f](Vec2 p) { return std::vector<double>{f(p)}; };
    return integrate_cell_multi(cell, wrap, 1, n_theta, r_split, levels, npts)[0];
}

double integrate_disk(Vec2 center, double R, const std::function<double(Vec2)>& f, int n_theta,
                      int levels, int npts) {
    std::vector<double> per_theta(n_theta, 0.0);
    parallel_for(n_theta, [&](int it) {
        double theta = 2.0 * std::numbers::pi * it / n_theta;
        Vec2 w{std::cos(theta), std::sin(theta)};
        per_theta[it] = radial_integral(
            [&](double r) { return f({center.x + r * w.x, center.y + r * w.y}); }, R, levels,
            npts);
    });
    double acc = 0.0;
    for (double v : per_theta) acc += v;
    return acc * 2.0 * std::numbers::pi / n_theta;
}

double integrate_cell_outside(const StarCell& cell, double r_in,
                              const std::function<double(Vec2)>& f, int n_theta, int levels,
                              int npts) {
    std::vector<ThetaNode> nodes = theta_nodes(cell, n_theta, npts);
    std::vector<double> per_node(nodes.size(), 0.0);
    parallel_for(static_cast<int>(nodes.size()), [&](int it) {
        double theta = nodes[it].theta;
        Vec2 w{std::cos(theta), std::sin(theta)};
        double R = cell.radius(theta);
        if (R <= r_in) return;
        per_node[it] = nodes[it].weight *
                       radial_integral_annulus(
                           [&](double r) {
                               return f({cell.center.x + r * w.x, cell.center.y + r * w.y});
                           },
                           r_in, R, levels, npts);
    });
    double acc = 0.0;
    for (double v : per_node) acc += v;
    return acc;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: bad input");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

} // namespace csvl
