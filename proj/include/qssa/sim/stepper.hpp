#pragma once

// One implicit-trapezoid stepper serves all three models. The unknown
// vector stacks the non-frozen blocks [z_c, x, y]; every block is either
// differential (trapezoid rule) or algebraic (residual forced to zero at the
// new point). The iteration matrix is reused across steps until Newton
// stalls, the step size changes, or the caller invalidates it at an event.

#include "qssa/algebra/linalg.hpp"
#include "qssa/model.hpp"
#include "qssa/sim/trajectory.hpp"

#include <limits>

namespace qssa::sim {

enum class Role { Frozen, Differential, Algebraic };

struct StepRoles {
    Role zc = Role::Differential;
    Role x = Role::Differential;
    Real x_rate_scale = 1.0;  // multiplies f on differential x rows (1/epsilon)
};

[[nodiscard]] inline StepRoles roles_for(ModelKind kind, Real epsilon_scale = 1.0) {
    switch (kind) {
        case ModelKind::Transient: return {Role::Frozen, Role::Differential, 1.0};
        case ModelKind::LongTerm: return {Role::Differential, Role::Differential, 1.0 / epsilon_scale};
        case ModelKind::Qss: return {Role::Differential, Role::Algebraic, 1.0};
    }
    return {};
}

class TrapezoidStepper {
public:
    TrapezoidStepper(const HybridModel& model, StepRoles roles, Real tol, int max_iterations = 20)
        : model_(model), roles_(roles), tol_(tol), max_iterations_(max_iterations) {
        const auto& lay = model.layout();
        nz_ = roles_.zc == Role::Frozen ? 0 : static_cast<Eigen::Index>(lay.size(Partition::SlowContinuous));
        nx_ = roles_.x == Role::Frozen ? 0 : static_cast<Eigen::Index>(lay.size(Partition::Fast));
        ny_ = static_cast<Eigen::Index>(lay.size(Partition::Algebraic));
        differential_ = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(nz_ + nx_ + ny_, false);
        differential_.head(nz_).setConstant(roles_.zc == Role::Differential);
        differential_.segment(nz_, nx_).setConstant(roles_.x == Role::Differential);
    }

    [[nodiscard]] const StepRoles& roles() const { return roles_; }
    [[nodiscard]] Eigen::Index unknowns() const { return nz_ + nx_ + ny_; }

    [[nodiscard]] Vector pack(const PartitionedState& s) const {
        Vector u(unknowns());
        u << s.zc.head(nz_), s.x.head(nx_), s.y;
        return u;
    }

    void unpack(const Vector& u, PartitionedState& s) const {
        if (nz_ > 0) s.zc = u.head(nz_);
        if (nx_ > 0) s.x = u.segment(nz_, nx_);
        s.y = u.tail(ny_);
    }

    /// Right-hand sides and constraints aligned with the unknown vector.
    [[nodiscard]] Vector stacked(const PartitionedState& s, Real t) const {
        const Residuals r = model_.eval_all(s, t);
        Vector v(unknowns());
        const Real xs = roles_.x == Role::Differential ? roles_.x_rate_scale : 1.0;
        v << r.hc.head(nz_), xs * r.f.head(nx_), r.g;
        return v;
    }

    /// Forget the iteration matrix; the next step re-evaluates it.
    void invalidate() { jac_valid_ = false; }

    /// Attempts one trapezoid step of size h from (s, t). On success `s`
    /// holds the new point and true is returned; on failure `s` is left
    /// unchanged. A singular iteration matrix throws SolverError.
    bool step(PartitionedState& s, Real t, Real h) {
        const Vector u0 = pack(s);
        const Vector v0 = stacked(s, t);
        if (!v0.allFinite()) return false;

        PartitionedState work = s;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const bool fresh = !jac_valid_;
            if (!jac_valid_) refresh(work, u0, t + h);
            if (h != factored_h_) factor(h);
            Vector u = u0;
            if (newton(work, u, u0, v0, t + h, h)) {
                unpack(u, s);
                return true;
            }
            if (fresh) break;
            jac_valid_ = false;
        }
        return false;
    }

private:
    [[nodiscard]] Vector residual(PartitionedState& work, const Vector& u, const Vector& u0, const Vector& v0,
                                  Real t1, Real h) const {
        unpack(u, work);
        const Vector v1 = stacked(work, t1);
        Vector r = v1;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (differential_[i]) r[i] = u[i] - u0[i] - 0.5 * h * (v1[i] + v0[i]);
        }
        return r;
    }

    bool newton(PartitionedState& work, Vector& u, const Vector& u0, const Vector& v0, Real t1, Real h) {
        Real prev = std::numeric_limits<Real>::infinity();
        for (int it = 0; it <= max_iterations_; ++it) {
            const Vector r = residual(work, u, u0, v0, t1, h);
            if (!r.allFinite()) return false;
            const Real norm = inf_norm(r);
            if (it > 0 && norm <= tol_) return true;
            if (it == max_iterations_) return false;
            if (it >= 2 && norm > 0.9 * prev) return false;
            prev = norm;
            u -= lu_.solve(r);
        }
        return false;
    }

    void refresh(PartitionedState& work, const Vector& u, Real t) {
        auto fn = [&](const Vector& v) {
            unpack(v, work);
            return stacked(work, t);
        };
        raw_jac_ = algebra::fd_jacobian(fn, u, unknowns());
        unpack(u, work);
        jac_valid_ = true;
        factored_h_ = -1.0;
    }

    void factor(Real h) {
        Matrix m = raw_jac_;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (differential_[i]) {
                m.row(i) *= -0.5 * h;
                m(i, i) += 1.0;
            }
        }
        factored_h_ = -1.0;
        lu_.compute(m);
        factored_h_ = h;
    }

    const HybridModel& model_;
    StepRoles roles_;
    Real tol_;
    int max_iterations_;
    Eigen::Index nz_ = 0, nx_ = 0, ny_ = 0;
    Eigen::Array<bool, Eigen::Dynamic, 1> differential_;

    Matrix raw_jac_;
    algebra::CheckedLu lu_;
    bool jac_valid_ = false;
    Real factored_h_ = -1.0;
};

}  // namespace qssa::sim
