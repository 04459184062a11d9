#include "csvl/krylov.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace csvl {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double nrm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(double s, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

} // namespace

KrylovResult gmres(const VecFn& apply, const std::vector<double>& b, std::vector<double>& x,
                   const KrylovOptions& opts, const VecFn& precond) {
    const std::size_t n = b.size();
    if (x.size() != n) x.assign(n, 0.0);
    double bnorm = nrm(b);
    KrylovResult res;
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        res.converged = true;
        return res;
    }

    auto M = [&](const std::vector<double>& v) { return precond ? precond(v) : v; };

    int total = 0;
    while (total < opts.max_iter) {
        std::vector<double> r = apply(x);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
        double beta = nrm(r);
        res.residual = beta / bnorm;
        if (res.residual <= opts.tol) {
            res.converged = true;
            res.iterations = total;
            return res;
        }

        int m = opts.restart;
        std::vector<std::vector<double>> V;
        V.push_back(r);
        for (double& v : V[0]) v /= beta;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
        g(0) = beta;
        std::vector<double> cs(m), sn(m);
        int j = 0;
        for (; j < m && total < opts.max_iter; ++j, ++total) {
            std::vector<double> w = apply(M(V[j]));
            for (int i = 0; i <= j; ++i) {
                H(i, j) = dot(w, V[i]);
                axpy(-H(i, j), V[i], w);
            }
            H(j + 1, j) = nrm(w);
            if (H(j + 1, j) > 1e-300)
                for (double& v : w) v /= H(j + 1, j);
            V.push_back(w);

            // Apply the accumulated Givens rotations, then form a new one.
            for (int i = 0; i < j; ++i) {
                double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            double denom = std::hypot(H(j, j), H(j + 1, j));
            cs[j] = H(j, j) / denom;
            sn[j] = H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g(j + 1) = -sn[j] * g(j);
            g(j) = cs[j] * g(j);
            if (std::abs(g(j + 1)) / bnorm <= opts.tol) {
                ++j;
                ++total;
                break;
            }
        }

        // Back substitution and update.
        Eigen::VectorXd y = Eigen::VectorXd::Zero(j);
        for (int i = j - 1; i >= 0; --i) {
            double s = g(i);
            for (int l = i + 1; l < j; ++l) s -= H(i, l) * y(l);
            y(i) = s / H(i, i);
        }
        std::vector<double> corr(n, 0.0);
        for (int i = 0; i < j; ++i) axpy(y(i), V[i], corr);
        corr = M(corr);
        axpy(1.0, corr, x);
    }

    std::vector<double> r = apply(x);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    res.residual = nrm(r) / bnorm;
    res.converged = res.residual <= opts.tol;
    res.iterations = total;
    return res;
}

} // namespace csvl
