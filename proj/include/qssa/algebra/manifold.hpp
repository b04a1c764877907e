#pragma once

// Constraint-manifold machinery: Jacobian blocks at a point, the reduced
// (algebraic variables eliminated) Jacobian, and the classification of a
// point as singular / type-k / member of the stable component Gamma_s.

#include "qssa/algebra/linalg.hpp"
#include "qssa/algebra/newton.hpp"
#include "qssa/model.hpp"

#include <limits>

namespace qssa::algebra {

struct JacobianBlocks {
    Matrix dxf, dyf, dxg, dyg;
    // Slow-variable blocks; empty unless requested.
    Matrix dzf, dzg, dzhc, dxhc, dyhc;
    PartitionedState at;

    [[nodiscard]] Matrix block_matrix() const {
        const auto nx = dxf.rows();
        const auto ny = dyg.rows();
        Matrix b(nx + ny, nx + ny);
        b << dxf, dyf, dxg, dyg;
        return b;
    }
};

/// Blocks by central finite differences, step max(1e-6, 1e-6 |v|) per variable.
[[nodiscard]] inline JacobianBlocks jacobian_blocks(const HybridModel& model, const PartitionedState& s,
                                                    Real t = 0.0, bool with_slow = false) {
    check_layout(model.layout(), s);
    if (!s.all_finite()) throw SolverError(SolverFailure::NonFiniteEntry, "non-finite state");
    const auto nz = s.zc.size();
    const auto nx = s.x.size();
    const auto ny = s.y.size();

    JacobianBlocks b;
    b.at = s;
    b.dxf.resize(nx, nx);
    b.dyf.resize(nx, ny);
    b.dxg.resize(ny, nx);
    b.dyg.resize(ny, ny);
    if (with_slow) {
        b.dzf.resize(nx, nz);
        b.dzg.resize(ny, nz);
        b.dzhc.resize(nz, nz);
        b.dxhc.resize(nz, nx);
        b.dyhc.resize(nz, ny);
    }

    PartitionedState probe = s;
    auto column = [&](Vector& var, Eigen::Index j) {
        const Real v0 = var[j];
        const Real h = fd_step(v0);
        var[j] = v0 + h;
        const Residuals up = model.eval_all(probe, t);
        var[j] = v0 - h;
        const Residuals down = model.eval_all(probe, t);
        var[j] = v0;
        Residuals d;
        d.hc = (up.hc - down.hc) / (2.0 * h);
        d.f = (up.f - down.f) / (2.0 * h);
        d.g = (up.g - down.g) / (2.0 * h);
        if (!d.hc.allFinite() || !d.f.allFinite() || !d.g.allFinite()) {
            throw SolverError(SolverFailure::NonFiniteEntry, "non-finite residual while differencing");
        }
        return d;
    };

    for (Eigen::Index j = 0; j < nx; ++j) {
        const auto d = column(probe.x, j);
        b.dxf.col(j) = d.f;
        b.dxg.col(j) = d.g;
        if (with_slow) b.dxhc.col(j) = d.hc;
    }
    for (Eigen::Index j = 0; j < ny; ++j) {
        const auto d = column(probe.y, j);
        b.dyf.col(j) = d.f;
        b.dyg.col(j) = d.g;
        if (with_slow) b.dyhc.col(j) = d.hc;
    }
    if (with_slow) {
        for (Eigen::Index j = 0; j < nz; ++j) {
            const auto d = column(probe.zc, j);
            b.dzf.col(j) = d.f;
            b.dzg.col(j) = d.g;
            b.dzhc.col(j) = d.hc;
        }
    }
    return b;
}

/// D_xf - D_yf D_yg^{-1} D_xg.
[[nodiscard]] inline Matrix reduced_jacobian(const JacobianBlocks& b, Real pivot_tol = 1e-12) {
    if (b.dyg.rows() == 0) return b.dxf;
    try {
        const CheckedLu lu(b.dyg, pivot_tol);
        return b.dxf - b.dyf * lu.solve(b.dxg);
    } catch (const SolverError& e) {
        throw SolverError(SolverFailure::SingularDyg, e.what());
    }
}

struct ClassifyOptions {
    Real singular_ratio = 1e-8;    // sigma_min/sigma_max below this counts as det = 0
    Real stability_margin = 1e-9;  // Re(lambda) < -margin counts as stable
};

struct ManifoldPointClass {
    bool singular = false;
    int type_k = 0;
    bool gamma_s_member = false;
    std::vector<Complex> reduced_spectrum;
    Real margin = -std::numeric_limits<Real>::infinity();
    Real singular_ratio = 1.0;  // of the block matrix
    int det_sign = 1;           // of the block matrix
};

[[nodiscard]] inline ManifoldPointClass classify_point(const JacobianBlocks& b, const ClassifyOptions& opt = {}) {
    ManifoldPointClass c;
    const Matrix block = b.block_matrix();
    c.singular_ratio = singular_value_ratio(block);
    c.singular = c.singular_ratio < opt.singular_ratio;
    if (block.size() > 0) {
        const Real det = block.partialPivLu().determinant();
        c.det_sign = det >= 0.0 ? 1 : -1;
        for (const auto& lambda : eigenvalues(block)) c.type_k += lambda.real() > 0.0 ? 1 : 0;
    }

    const bool dyg_ok = singular_value_ratio(b.dyg) >= opt.singular_ratio;
    if (dyg_ok) {
        try {
            const Matrix reduced = reduced_jacobian(b);
            c.reduced_spectrum = eigenvalues(reduced);
            for (const auto& lambda : c.reduced_spectrum) c.margin = std::max(c.margin, lambda.real());
        } catch (const SolverError&) {
            c.reduced_spectrum.clear();
            c.margin = std::numeric_limits<Real>::quiet_NaN();
        }
    } else {
        c.margin = std::numeric_limits<Real>::quiet_NaN();
    }
    c.gamma_s_member = !c.singular && dyg_ok && c.margin < -opt.stability_margin;
    return c;
}

/// Solves g(z_c, z_d, x, y) = 0 for y with everything else held.
[[nodiscard]] inline Vector solve_algebraic(const HybridModel& model, const PartitionedState& s,
                                            const Vector& y_guess, const NewtonOptions& opt = {}) {
    check_layout(model.layout(), s);
    PartitionedState work = s;
    auto residual = [&](const Vector& y) {
        work.y = y;
        return model.eval_all(work, 0.0).g;
    };
    return newton_solve(residual, y_guess, opt).solution;
}

/// Residual-norm history variant, used to inspect the convergence tail.
[[nodiscard]] inline NewtonResult solve_algebraic_traced(const HybridModel& model, const PartitionedState& s,
                                                         const Vector& y_guess, const NewtonOptions& opt = {}) {
    PartitionedState work = s;
    auto residual = [&](const Vector& y) {
        work.y = y;
        return model.eval_all(work, 0.0).g;
    };
    return newton_solve(residual, y_guess, opt);
}

namespace detail {
inline Vector stack(const Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
}
}  // namespace detail

/// (x, y) = l(z_c, z_d): the equilibrium of the frozen transient model,
/// f = 0 and g = 0 with the slow variables held. `guess` supplies z_c, z_d
/// and the starting (x, y).
[[nodiscard]] inline NewtonResult solve_equilibrium_fast_traced(const HybridModel& model,
                                                                const PartitionedState& guess,
                                                                const NewtonOptions& opt = {}) {
    check_layout(model.layout(), guess);
    PartitionedState work = guess;
    const auto nx = guess.x.size();
    const auto ny = guess.y.size();
    auto residual = [&](const Vector& u) {
        work.x = u.head(nx);
        work.y = u.tail(ny);
        const auto r = model.eval_all(work, 0.0);
        return detail::stack(r.f, r.g);
    };
    return newton_solve(residual, detail::stack(guess.x, guess.y), opt);
}

[[nodiscard]] inline PartitionedState solve_equilibrium_fast(const HybridModel& model, const PartitionedState& guess,
                                                             const NewtonOptions& opt = {}) {
    const auto res = solve_equilibrium_fast_traced(model, guess, opt);
    PartitionedState out = guess;
    out.x = res.solution.head(guess.x.size());
    out.y = res.solution.tail(guess.y.size());
    return out;
}

/// Long-term equilibrium: the model's initialization residual for z_c
/// together with f = 0 and g = 0, solved for (z_c, x, y) at fixed z_d.
[[nodiscard]] inline PartitionedState solve_longterm_equilibrium(const HybridModel& model,
                                                                 const PartitionedState& guess,
                                                                 const NewtonOptions& opt = {}) {
    check_layout(model.layout(), guess);
    PartitionedState work = guess;
    const auto nz = guess.zc.size();
    const auto nx = guess.x.size();
    const auto ny = guess.y.size();
    auto unpack = [&](const Vector& u) {
        work.zc = u.head(nz);
        work.x = u.segment(nz, nx);
        work.y = u.tail(ny);
    };
    auto residual = [&](const Vector& u) {
        unpack(u);
        const auto r = model.eval_all(work, 0.0);
        Vector out(nz + nx + ny);
        out << model.eval_slow_init(work), r.f, r.g;
        return out;
    };
    Vector u0(nz + nx + ny);
    u0 << guess.zc, guess.x, guess.y;
    const auto res = newton_solve(residual, u0, opt);
    unpack(res.solution);
    return work;
}

}  // namespace qssa::algebra
