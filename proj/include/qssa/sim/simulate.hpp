#pragma once

#include "qssa/algebra/manifold.hpp"
#include "qssa/sim/limit_cycle.hpp"
#include "qssa/sim/stepper.hpp"
#include "qssa/sim/trajectory.hpp"

#include <cmath>
#include <optional>

namespace qssa::sim {

struct SimInit {
    PartitionedState state;
    Real t0 = 0.0;
    std::optional<DiscreteTimers> timers;  // model.initial_timers() when unset
    bool freeze_discrete = false;          // skip discrete updates (fixed z_d)
};

/// (x, y) replaced by the frozen transient model's equilibrium l(z_c, z_d).
[[nodiscard]] inline PartitionedState qss_project(const HybridModel& model, const PartitionedState& state,
                                                  const algebra::NewtonOptions& opt = {}) {
    return algebra::solve_equilibrium_fast(model, state, opt);
}

namespace detail {

[[nodiscard]] inline bool exceeds_bound(const Layout& layout, const PartitionedState& s, Real bound) {
    if (!s.all_finite()) return true;
    for (auto p : kPartitions) {
        const Vector& v = s.part(p);
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (layout.is_angle(p, static_cast<std::size_t>(i))) continue;
            if (std::abs(v[i]) > bound) return true;
        }
    }
    return false;
}

[[nodiscard]] inline PointCheck point_check(const algebra::ManifoldPointClass& c) {
    return {c.gamma_s_member, c.singular, c.type_k, c.margin, c.singular_ratio, c.det_sign};
}

class Runner {
public:
    Runner(const HybridModel& model, ModelKind kind, const SimConfig& cfg)
        : model_(model),
          layout_(model.layout()),
          kind_(kind),
          cfg_(cfg),
          roles_(roles_for(kind, cfg.epsilon_scale)),
          stepper_(model, roles_, cfg.newton_tol),
          detector_(section_angles(), section_probe(),
                    {cfg.limit_cycle_tol, cfg.limit_cycle_min_rate, cfg.limit_cycle_returns, 0.0, 0.999, 4}) {}

    Trajectory run(const SimInit& init) {
        Trajectory traj;
        traj.model = kind_;
        traj.step = cfg_.step_for(kind_);
        traj.epsilon_scale = cfg_.epsilon_scale;

        check_layout(layout_, init.state);
        PartitionedState s = init.state;
        DiscreteTimers timers = init.timers ? *init.timers : model_.initial_timers(s);
        const Real t0 = init.t0;
        const bool discrete = kind_ != ModelKind::Transient && !init.freeze_discrete;
        detector_ = LimitCycleDetector(section_angles(), section_probe(),
                                       {cfg_.limit_cycle_tol, cfg_.limit_cycle_min_rate, cfg_.limit_cycle_returns,
                                        t0 + cfg_.limit_cycle_settle, 0.999, 4});

        auto finish = [&](Termination why, std::string detail) {
            traj.termination = why;
            traj.detail = std::move(detail);
            traj.final_timers = timers;
            return traj;
        };

        try {
            make_consistent(s, t0);
        } catch (const SolverError& e) {
            traj.times.push_back(t0);
            traj.states.push_back(s);
            return finish(e.kind() == SolverFailure::SingularJacobian ? Termination::Singular
                                                                      : Termination::SolverFailure,
                          std::string("initial projection failed: ") + e.what());
        }

        std::optional<Termination> stop;
        std::string stop_detail;
        auto record = [&](Real t) {
            traj.times.push_back(t);
            traj.states.push_back(s);
            if (auto why = after_sample(traj, s, t, discrete)) {
                stop = why;
                stop_detail = detail_;
            }
        };
        record(t0);

        const Real h = traj.step;
        const Real horizon = cfg_.horizon;
        for (long n = 1; !stop; ++n) {
            const Real t_prev = traj.times.back();
            if (t_prev >= horizon - 1e-9 * h) break;
            const Real t = std::min(t0 + static_cast<Real>(n) * h, horizon);
            try {
                if (!advance(s, t_prev, t - t_prev, 0)) {
                    return finish(Termination::SolverFailure,
                                  "step from t=" + format_real(t_prev) + " failed at h/" +
                                      std::to_string(1 << cfg_.max_halvings));
                }
            } catch (const SolverError& e) {
                return finish(e.kind() == SolverFailure::SingularJacobian ? Termination::Singular
                                                                          : Termination::SolverFailure,
                              e.what());
            }

            if (discrete) {
                auto upd = model_.eval_discrete_update(s, t, timers);
                timers = std::move(upd.timers);
                if (!upd.events.empty()) {
                    const PartitionedState before = s;
                    s.zd = upd.zd;
                    try {
                        make_consistent(s, t);
                    } catch (const SolverError& e) {
                        s = before;
                        traj.times.push_back(t);
                        traj.states.push_back(s);
                        return finish(e.kind() == SolverFailure::SingularJacobian ? Termination::Singular
                                                                                  : Termination::SolverFailure,
                                      std::string("re-solve after event failed: ") + e.what());
                    }
                    for (auto& ev : upd.events) traj.events.push_back(std::move(ev));
                    stepper_.invalidate();
                    conv_since_.reset();
                }
            }
            record(t);
        }
        return finish(stop.value_or(Termination::HorizonReached), stop ? stop_detail : std::string{});
    }

private:
    [[nodiscard]] std::vector<bool> section_angles() const {
        std::vector<bool> out;
        for (auto p : {Partition::SlowContinuous, Partition::Fast}) {
            for (std::size_t i = 0; i < layout_.size(p); ++i) out.push_back(layout_.is_angle(p, i));
        }
        return out;
    }

    [[nodiscard]] Eigen::Index section_probe() const {
        return static_cast<Eigen::Index>(layout_.size(Partition::SlowContinuous) + model_.oscillation_probe());
    }

    /// Solves the constraints of the current model at fixed differential states.
    void make_consistent(PartitionedState& s, Real t) const {
        const Residuals r = model_.eval_all(s, t);
        algebra::NewtonOptions opt;
        opt.tol = cfg_.algebraic_tol;
        if (kind_ == ModelKind::Qss) {
            if (inf_norm(r.f) > cfg_.algebraic_tol || inf_norm(r.g) > cfg_.algebraic_tol) s = qss_project(model_, s, opt);
        } else if (inf_norm(r.g) > cfg_.algebraic_tol) {
            s.y = algebra::solve_algebraic(model_, s, s.y, opt);
        }
    }

    bool advance(PartitionedState& s, Real t, Real h, int depth) {
        PartitionedState trial = s;
        if (stepper_.step(trial, t, h)) {
            s = std::move(trial);
            return true;
        }
        if (depth >= cfg_.max_halvings) return false;
        PartitionedState mid = s;
        if (!advance(mid, t, 0.5 * h, depth + 1)) return false;
        if (!advance(mid, t + 0.5 * h, 0.5 * h, depth + 1)) return false;
        s = std::move(mid);
        return true;
    }

    std::optional<Termination> after_sample(Trajectory& traj, const PartitionedState& s, Real t, bool discrete) {
        if (detail::exceeds_bound(layout_, s, cfg_.divergence_bound)) {
            detail_ = "state norm above " + format_real(cfg_.divergence_bound) + " at t=" + format_real(t);
            return Termination::Diverged;
        }
        const Residuals r = model_.eval_all(s, t);

        if (kind_ == ModelKind::Qss) {
            const auto cls = algebra::classify_point(algebra::jacobian_blocks(model_, s, t));
            const PointCheck pc = point_check(cls);
            const bool flipped = !traj.checks.empty() && traj.checks.back().det_sign != pc.det_sign;
            traj.checks.push_back(pc);
            if (pc.singular || flipped) {
                detail_ = pc.singular ? "constraint Jacobian singular at t=" + format_real(t)
                                      : "constraint Jacobian determinant changed sign before t=" + format_real(t);
                return Termination::Singular;
            }
        }

        Real measure = 0.0;
        switch (kind_) {
            case ModelKind::Transient: measure = inf_norm(r.f); break;
            case ModelKind::LongTerm: measure = std::max(inf_norm(r.f), inf_norm(r.hc)); break;
            case ModelKind::Qss: measure = inf_norm(r.hc); break;
        }
        const bool quiet = measure < cfg_.converge_tol && !(discrete && model_.activity_pending(s, t));
        if (quiet) {
            if (!conv_since_) conv_since_ = t;
            if (cfg_.stop_when_converged && t - *conv_since_ >= cfg_.converge_hold - 1e-9) {
                detail_ = "rates below " + format_real(cfg_.converge_tol) + " since t=" + format_real(*conv_since_);
                return Termination::Converged;
            }
        } else {
            conv_since_.reset();
        }

        if (kind_ != ModelKind::Qss && s.x.size() > 0) {
            const auto nz = s.zc.size();
            Vector p(nz + s.x.size());
            Vector dp(p.size());
            p << s.zc, s.x;
            if (kind_ == ModelKind::LongTerm) {
                dp << r.hc, roles_.x_rate_scale * r.f;
            } else {
                dp << Vector::Zero(nz), r.f;
            }
            if (detector_.observe(t, p, dp, inf_norm(r.f))) {
                detail_ = "periodic returns of the oscillation section up to t=" + format_real(t);
                return Termination::LimitCycle;
            }
        }
        return std::nullopt;
    }

    const HybridModel& model_;
    const Layout& layout_;
    ModelKind kind_;
    SimConfig cfg_;
    StepRoles roles_;
    TrapezoidStepper stepper_;
    LimitCycleDetector detector_;
    std::optional<Real> conv_since_;
    std::string detail_;
};

}  // namespace detail

/// Runs one of the three models from `init` up to cfg.horizon (absolute time).
[[nodiscard]] inline Trajectory simulate(const HybridModel& model, ModelKind kind, const SimInit& init,
                                         const SimConfig& cfg) {
    if (!(cfg.step_for(kind) > 0.0) || !(cfg.epsilon_scale > 0.0)) throw Error("step sizes and epsilon_scale must be > 0");
    detail::Runner runner(model, kind, cfg);
    return runner.run(init);
}

/// Fast ODE plus algebraic constraints with z_c and z_d frozen.
[[nodiscard]] inline Trajectory simulate_transient(const HybridModel& model, const SimInit& init, const SimConfig& cfg) {
    return simulate(model, ModelKind::Transient, init, cfg);
}

/// The full hybrid model; fast rates are divided by cfg.epsilon_scale.
[[nodiscard]] inline Trajectory simulate_longterm(const HybridModel& model, const SimInit& init, const SimConfig& cfg) {
    return simulate(model, ModelKind::LongTerm, init, cfg);
}

/// Slow ODE on the manifold f = 0, g = 0; each sample is classified.
[[nodiscard]] inline Trajectory simulate_qss(const HybridModel& model, const SimInit& init, const SimConfig& cfg) {
    return simulate(model, ModelKind::Qss, init, cfg);
}

}  // namespace qssa::sim
