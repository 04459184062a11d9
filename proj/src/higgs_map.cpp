#include "csvl/higgs_map.hpp"

#include <cmath>
#include <sstream>

namespace csvl {

double F(double v) {
    if (v > 0.0) throw out_of_branch_error("F: v must be <= 0");
    // 1 + v - e^v = v - expm1(v); the expm1 form keeps relative accuracy
    // near v = 0 where the leading terms cancel.
    return v - std::expm1(v);
}

double F_inverse(double u, const HiggsBranch& branch) {
    if (u > 0.0) throw out_of_branch_error("F_inverse: u must be <= 0");
    if (u == 0.0) return 0.0;

    // Bracket: F(u-1) <= u <= F(0) = 0.
    double lo = u - 1.0, hi = 0.0;
    double v = (u <= -2.0) ? u - 1.0 : -std::sqrt(-2.0 * u);
    if (v < lo || v > hi) v = 0.5 * (lo + hi);

    double tol = branch.tolerance * (1.0 + std::abs(u));
    for (int it = 0; it < branch.max_iter; ++it) {
        double r = F(v) - u;
        if (std::abs(r) <= tol) return v;
        if (r > 0.0) hi = v;
        else lo = v;
        double deriv = -std::expm1(v); // 1 - e^v
        double step = (deriv > 0.0) ? r / deriv : 0.0;
        double vn = v - step;
        if (!(vn > lo && vn < hi) || step == 0.0) vn = 0.5 * (lo + hi);
        v = vn;
    }
    std::ostringstream os;
    os << "F_inverse: no convergence at u = " << u;
    throw std::runtime_error(os.str());
}

double nonlinearity(double u, double eps, const HiggsBranch& branch) {
    if (!(eps > 0.0)) throw std::invalid_argument("nonlinearity: eps must be positive");
    double V = F_inverse(u, branch);
    double ev = std::exp(V);
    double one_minus = -std::expm1(V); // 1 - e^V, accurate near V = 0
    return ev * one_minus * one_minus / (eps * eps);
}

double nonlinearity_derivative(double u, double eps, const HiggsBranch& branch) {
    if (!(eps > 0.0)) throw std::invalid_argument("nonlinearity_derivative: eps must be positive");
    double V = F_inverse(u, branch);
    double ev = std::exp(V);
    return ev * (1.0 - 3.0 * ev) / (eps * eps);
}

Field F_inverse_field(const Field& u, const HiggsBranch& branch) {
    return map(u, [&branch](double x) { return F_inverse(x, branch); });
}

} // namespace csvl
