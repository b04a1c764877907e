#pragma once

#include "qssa/algebra/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qssa::algebra {

struct NewtonOptions {
    Real tol = 1e-10;        // on the residual infinity norm
    int max_iterations = 50;
    int max_backtracks = 8;  // step halvings on the residual norm
    Real pivot_tol = 1e-12;
};

struct NewtonResult {
    Vector solution;
    std::vector<Real> residual_norms;  // one entry per evaluated iterate, starting at the guess
    int iterations = 0;
};

using JacobianFn = std::function<Matrix(const Vector&)>;

/// Damped Newton iteration for F(u) = 0. Uses `jacobian` when given and a
/// central finite-difference Jacobian otherwise.
[[nodiscard]] inline NewtonResult newton_solve(const ResidualFn& residual, Vector guess,
                                               const NewtonOptions& opt = {},
                                               const std::optional<JacobianFn>& jacobian = std::nullopt) {
    NewtonResult out;
    Vector u = std::move(guess);
    Vector r = residual(u);
    if (!r.allFinite()) throw SolverError(SolverFailure::NonFiniteEntry, "non-finite residual at guess");
    Real norm = inf_norm(r);
    out.residual_norms.push_back(norm);

    for (int it = 0; it < opt.max_iterations; ++it) {
        if (norm <= opt.tol) {
            out.solution = std::move(u);
            out.iterations = it;
            return out;
        }
        const Matrix jac = jacobian ? (*jacobian)(u) : fd_jacobian(residual, u, r.size());
        const CheckedLu lu(jac, opt.pivot_tol);
        const Vector step = lu.solve(r);

        Real lambda = 1.0;
        Vector trial = u - step;
        Vector r_trial = residual(trial);
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            if (r_trial.allFinite() && inf_norm(r_trial) < norm) break;
            lambda *= 0.5;
            trial = u - lambda * step;
            r_trial = residual(trial);
        }
        if (!r_trial.allFinite()) {
            throw SolverError(SolverFailure::NonFiniteEntry, "non-finite residual during Newton iteration");
        }
        u = std::move(trial);
        r = std::move(r_trial);
        norm = inf_norm(r);
        out.residual_norms.push_back(norm);
    }
    if (norm <= opt.tol) {
        out.solution = std::move(u);
        out.iterations = opt.max_iterations;
        return out;
    }
    throw SolverError(SolverFailure::MaxIterations,
                      "no convergence in " + std::to_string(opt.max_iterations) +
                          " iterations (residual " + format_real(norm) + ")");
}

}  // namespace qssa::algebra
