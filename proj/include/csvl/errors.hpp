#pragma once

#include <stdexcept>
#include <string>

namespace csvl {

// Evaluation requested at a point where the quantity is singular
// (Green function on the diagonal, u0 at a vortex point).
struct singular_point_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Argument outside the branch v <= 0 / u <= 0 of the substitution.
struct out_of_branch_error : std::domain_error {
    using std::domain_error::domain_error;
};

// Right-hand side of the periodic Poisson problem has a nonzero mean.
struct nonzero_mean_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Coincident centers, center on a vortex point, odd N, and similar.
struct invalid_configuration_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The matching constant c(w) has a negative discriminant: the pair
// (eps, mu) is outside the feasible window.
struct ansatz_infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// r -> 0 extrapolation of the regularized integral did not settle.
struct limit_unstable_error : std::runtime_error {
    limit_unstable_error(const std::string& what, std::string table_csv)
        : std::runtime_error(what), table(std::move(table_csv)) {}
    std::string table;
};

// Gram matrix of the approximate kernels is numerically singular.
struct projection_degenerate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No root of the reduced equation in the mu-window.
struct reduced_infeasible_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Nonlinear iteration failed; carries the residual trace.
struct nonconvergence_error : std::runtime_error {
    nonconvergence_error(const std::string& what, std::string trace_csv)
        : std::runtime_error(what), trace(std::move(trace_csv)) {}
    std::string trace;
};

// Critical-point search left the admissible set.
struct search_failure_error : std::runtime_error {
    search_failure_error(const std::string& what, std::string trace_csv)
        : std::runtime_error(what), trace(std::move(trace_csv)) {}
    std::string trace;
};

struct linear_solve_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace csvl
