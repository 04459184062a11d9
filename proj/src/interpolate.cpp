#include "csvl/interpolate.hpp"

#include <cmath>

namespace csvl {

namespace {

// Catmull-Rom weights for samples at t = -1, 0, 1, 2 evaluated at t in [0,1].
inline void catmull_rom(double t, double w[4]) {
    double t2 = t * t, t3 = t2 * t;
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
    w[3] = 0.5 * (t3 - t2);
}

} // namespace

double interp_bicubic(const Field& f, Vec2 p) {
    const TorusDomain& dom = f.domain;
    const int n = dom.n;

    // Fractional grid coordinates relative to the offset lattice.
    double gx = p.x / dom.h1() - dom.offset.x;
    double gy = p.y / dom.h2() - dom.offset.y;
    double fx = std::floor(gx), fy = std::floor(gy);
    int ix0 = static_cast<int>(fx), iy0 = static_cast<int>(fy);
    double tx = gx - fx, ty = gy - fy;

    double wx[4], wy[4];
    catmull_rom(tx, wx);
    catmull_rom(ty, wy);

    auto wrap = [n](int i) {
        int r = i % n;
        return r < 0 ? r + n : r;
    };

    double acc = 0.0;
    for (int b = 0; b < 4; ++b) {
        int iy = wrap(iy0 - 1 + b);
        double row = 0.0;
        for (int a = 0; a < 4; ++a) row += wx[a] * f.at(wrap(ix0 - 1 + a), iy);
        acc += wy[b] * row;
    }
    return acc;
}

} // namespace csvl
