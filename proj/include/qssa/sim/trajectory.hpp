#pragma once

#include "qssa/model.hpp"

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

namespace qssa::sim {

enum class ModelKind { Transient, LongTerm, Qss };

[[nodiscard]] inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Transient: return "transient";
        case ModelKind::LongTerm: return "longterm";
        case ModelKind::Qss: return "qss";
    }
    return "?";
}

enum class Termination { HorizonReached, Converged, Diverged, Singular, SolverFailure, LimitCycle };

[[nodiscard]] inline std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::HorizonReached: return "horizon-reached";
        case Termination::Converged: return "converged";
        case Termination::Diverged: return "diverged";
        case Termination::Singular: return "singular";
        case Termination::SolverFailure: return "solver-failure";
        case Termination::LimitCycle: return "limit-cycle";
    }
    return "?";
}

struct SimConfig {
    Real h_transient = 0.01;
    Real h_longterm = 0.05;
    Real h_qss = 1.0;
    Real horizon = 60.0;
    Real newton_tol = 1e-8;
    Real algebraic_tol = 1e-10;
    Real epsilon_scale = 1.0;
    Real qss_start_time = 30.0;

    // Termination tests.
    Real converge_tol = 1e-8;
    Real converge_hold = 1.0;        // s the convergence test must hold
    bool stop_when_converged = true;
    Real divergence_bound = 1e6;
    int max_halvings = 6;            // smallest step h/64
    Real limit_cycle_tol = 1e-4;
    Real limit_cycle_min_rate = 1e-4;
    int limit_cycle_returns = 3;
    Real limit_cycle_settle = 5.0;   // s after the start before sections count

    void validate() const {
        auto positive = [](Real v, const char* what) {
            if (!(v > 0.0)) throw Error(std::string(what) + " must be > 0");
        };
        positive(h_transient, "h_transient");
        positive(h_longterm, "h_longterm");
        positive(h_qss, "h_qss");
        positive(newton_tol, "newton_tol");
        positive(algebraic_tol, "algebraic_tol");
        positive(epsilon_scale, "epsilon_scale");
        if (!(horizon >= qss_start_time)) throw Error("horizon must be >= qss_start_time");
        if (qss_start_time < 0.0) throw Error("qss_start_time must be >= 0");
    }

    [[nodiscard]] Real step_for(ModelKind k) const {
        switch (k) {
            case ModelKind::Transient: return h_transient;
            case ModelKind::LongTerm: return h_longterm;
            case ModelKind::Qss: return h_qss;
        }
        return h_longterm;
    }
};

/// Per-sample manifold classification recorded by QSS runs.
struct PointCheck {
    bool gamma_s_member = false;
    bool singular = false;
    int type_k = 0;
    Real margin = 0.0;
    Real singular_ratio = 1.0;
    int det_sign = 1;
};

/// Time-stamped states of one run plus its event log. When an event fires
/// at a step boundary the stored sample is the post-jump state.
struct Trajectory {
    ModelKind model = ModelKind::LongTerm;
    Real step = 0.0;
    Real epsilon_scale = 1.0;
    std::vector<Real> times;
    std::vector<PartitionedState> states;
    std::vector<DiscreteEvent> events;
    std::vector<PointCheck> checks;  // QSS only, one per sample
    Termination termination = Termination::HorizonReached;
    std::string detail;
    DiscreteTimers final_timers;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] bool empty() const { return times.empty(); }
    [[nodiscard]] Real start_time() const { return times.front(); }
    [[nodiscard]] Real end_time() const { return times.back(); }
    [[nodiscard]] const PartitionedState& final_state() const { return states.back(); }

    /// Index of the sample at time t (exact match within 1e-9), or size().
    [[nodiscard]] std::size_t index_at(Real t) const {
        auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9);
        if (it != times.end() && std::abs(*it - t) <= 1e-9) return static_cast<std::size_t>(it - times.begin());
        return times.size();
    }

    /// Linear interpolation of the state at time t inside [start, end].
    /// Angles are interpolated without wrapping (samples are close in time).
    [[nodiscard]] PartitionedState interpolate(Real t) const {
        if (times.empty()) throw Error("empty trajectory");
        if (t <= times.front()) return states.front();
        if (t >= times.back()) return states.back();
        auto it = std::upper_bound(times.begin(), times.end(), t);
        const auto i = static_cast<std::size_t>(it - times.begin());
        const Real t0 = times[i - 1];
        const Real t1 = times[i];
        const Real w = (t - t0) / (t1 - t0);
        if (w == 0.0) return states[i - 1];
        const auto& a = states[i - 1];
        const auto& b = states[i];
        PartitionedState out;
        out.zc = (1.0 - w) * a.zc + w * b.zc;
        out.zd = a.zd;  // piecewise constant, right-continuous at the sample
        out.x = (1.0 - w) * a.x + w * b.x;
        out.y = (1.0 - w) * a.y + w * b.y;
        return out;
    }
};

}  // namespace qssa::sim
