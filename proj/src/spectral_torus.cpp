#include "csvl/spectral_torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace csvl {

TorusDomain make_domain(double L1, double L2, int n, Vec2 offset) {
    if (!(L1 > 0.0) || !(L2 > 0.0))
        throw std::invalid_argument("make_domain: periods must be positive");
    if (n < 16 || n % 2 != 0)
        throw std::invalid_argument("make_domain: n must be even and >= 16");
    if (offset.x < 0.0 || offset.x >= 1.0 || offset.y < 0.0 || offset.y >= 1.0)
        throw std::invalid_argument("make_domain: offset components must lie in [0,1)");
    return TorusDomain{L1, L2, n, offset};
}

double Field::max() const { return *std::max_element(values.begin(), values.end()); }
double Field::min() const { return *std::min_element(values.begin(), values.end()); }

double Field::sup_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

bool Field::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void Field::check_declared_mean() const {
    if (!declared_mean) return;
    double m = mean(*this);
    double tol = 1e-12 * (1.0 + std::abs(*declared_mean));
    if (std::abs(m - *declared_mean) > tol) {
        std::ostringstream os;
        os << "Field: quadrature mean " << m << " violates declared mean " << *declared_mean;
        throw invalid_configuration_error(os.str());
    }
}

Field sample(const TorusDomain& dom, const std::function<double(Vec2)>& f) {
    Field out(dom);
    for (int iy = 0; iy < dom.n; ++iy)
        for (int ix = 0; ix < dom.n; ++ix) out.at(ix, iy) = f(dom.node(ix, iy));
    return out;
}

Field map(const Field& f, const std::function<double(double)>& op) {
    Field out = f;
    out.declared_mean.reset();
    for (double& v : out.values) v = op(v);
    return out;
}

Field zip(const Field& a, const Field& b, const std::function<double(double, double)>& op) {
    if (a.domain != b.domain) throw std::invalid_argument("zip: domain mismatch");
    Field out = a;
    out.declared_mean.reset();
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = op(a.values[i], b.values[i]);
    return out;
}

Field operator+(const Field& a, const Field& b) {
    return zip(a, b, [](double x, double y) { return x + y; });
}
Field operator-(const Field& a, const Field& b) {
    return zip(a, b, [](double x, double y) { return x - y; });
}
Field operator*(double s, const Field& a) {
    return map(a, [s](double x) { return s * x; });
}
Field& operator+=(Field& a, const Field& b) {
    if (a.domain != b.domain) throw std::invalid_argument("+=: domain mismatch");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += b.values[i];
    a.declared_mean.reset();
    return a;
}

double integrate(const Field& f) {
    double s = 0.0;
    for (double v : f.values) s += v;
    return s * f.domain.h1() * f.domain.h2();
}

double mean(const Field& f) { return integrate(f) / f.domain.area(); }

double inner(const Field& a, const Field& b) {
    if (a.domain != b.domain) throw std::invalid_argument("inner: domain mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s * a.domain.h1() * a.domain.h2();
}

double norm_l2(const Field& f) { return std::sqrt(inner(f, f)); }

namespace {

// Per-grid-size FFTW workspace; plans are expensive to create, so they are
// cached behind a mutex and reused across calls.
struct SpectralWorkspace {
    int n;
    double* real;
    fftw_complex* spec;
    fftw_plan fwd;
    fftw_plan bwd;

    explicit SpectralWorkspace(int n_) : n(n_) {
        real = fftw_alloc_real(static_cast<std::size_t>(n) * n);
        spec = fftw_alloc_complex(static_cast<std::size_t>(n) * (n / 2 + 1));
        fwd = fftw_plan_dft_r2c_2d(n, n, real, spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_2d(n, n, spec, real, FFTW_ESTIMATE);
    }
    ~SpectralWorkspace() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(real);
        fftw_free(spec);
    }
    SpectralWorkspace(const SpectralWorkspace&) = delete;
};

std::mutex g_fft_mutex;

SpectralWorkspace& workspace_for(int n) {
    static std::map<int, std::unique_ptr<SpectralWorkspace>> registry;
    auto it = registry.find(n);
    if (it == registry.end())
        it = registry.emplace(n, std::make_unique<SpectralWorkspace>(n)).first;
    return *it->second;
}

// Applies a multiplier m(kx^2 + ky^2) in Fourier space. The zero mode is
// set by zero_mode_value times the input zero mode.
Field apply_symbol(const Field& f, const std::function<double(double)>& symbol,
                   double zero_mode_factor) {
    const int n = f.domain.n;
    const double twopi = 2.0 * std::numbers::pi;

    std::lock_guard<std::mutex> lock(g_fft_mutex);
    SpectralWorkspace& ws = workspace_for(n);
    std::copy(f.values.begin(), f.values.end(), ws.real);
    fftw_execute(ws.fwd);

    const int nc = n / 2 + 1;
    for (int iy = 0; iy < n; ++iy) {
        int my = (iy <= n / 2) ? iy : iy - n;
        double ky = twopi * my / f.domain.L2;
        for (int ix = 0; ix < nc; ++ix) {
            double kx = twopi * ix / f.domain.L1;
            double k2 = kx * kx + ky * ky;
            double m = (ix == 0 && iy == 0) ? zero_mode_factor : symbol(k2);
            std::size_t idx = static_cast<std::size_t>(iy) * nc + ix;
            ws.spec[idx][0] *= m;
            ws.spec[idx][1] *= m;
        }
    }

    fftw_execute(ws.bwd);
    Field out(f.domain);
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = ws.real[i] * norm;
    return out;
}

} // namespace

Field laplacian(const Field& f) {
    return apply_symbol(f, [](double k2) { return -k2; }, 0.0);
}

Field poisson_solve(const Field& rhs, std::optional<double> tol_mean) {
    double m = mean(rhs);
    double tol = tol_mean.value_or(1e-10 * rhs.sup_abs());
    if (std::abs(m) > tol && rhs.sup_abs() > 0.0) {
        std::ostringstream os;
        os << "poisson_solve: rhs mean " << m << " exceeds tolerance " << tol;
        throw nonzero_mean_error(os.str());
    }
    Field out = apply_symbol(rhs, [](double k2) { return -1.0 / k2; }, 0.0);
    out.declared_mean = 0.0;
    return out;
}

Field helmholtz_solve(const Field& rhs, double shift) {
    if (!(shift > 0.0)) throw std::invalid_argument("helmholtz_solve: shift must be positive");
    return apply_symbol(rhs, [shift](double k2) { return -1.0 / (k2 + shift); }, -1.0 / shift);
}

} // namespace csvl
