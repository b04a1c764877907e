#pragma once

#include "qssa/core.hpp"

#include <string>
#include <vector>

namespace qssa {

/// Delay timer attached to one discrete variable. A timer arms when its
/// device first asks for a change and fires once the applicable delay has
/// elapsed; `count` is the number of changes made in the current excursion.
struct DiscreteTimer {
    bool armed = false;
    int direction = 0;
    Real start = 0.0;
    int count = 0;

    friend bool operator==(const DiscreteTimer&, const DiscreteTimer&) = default;
};

using DiscreteTimers = std::vector<DiscreteTimer>;

/// One discrete jump z_d(k-1) -> z_d(k).
struct DiscreteEvent {
    Real t = 0.0;
    std::string device;
    std::size_t index = 0;  // position in z_d
    Real old_value = 0.0;
    Real new_value = 0.0;
};

struct DiscreteUpdate {
    Vector zd;
    std::vector<DiscreteEvent> events;
    DiscreteTimers timers;
};

/// Stacked residuals of one evaluation point.
struct Residuals {
    Vector hc;
    Vector f;
    Vector g;
};

/// The generic long-term stability model
///
///     z_c' = h_c(z_c, z_d, x, y, t)
///     z_d(k+1) = h_d(z_c, z_d(k), x, y)
///     x'   = f(z_c, z_d, x, y)
///     0    = g(z_c, z_d, x, y)
///
/// Implementations are immutable after construction and every method is a
/// pure function of its arguments.
class HybridModel {
public:
    virtual ~HybridModel() = default;

    [[nodiscard]] virtual const Layout& layout() const = 0;

    [[nodiscard]] virtual Residuals eval_all(const PartitionedState& s, Real t) const = 0;

    [[nodiscard]] Vector eval_fast(const PartitionedState& s) const {
        check_layout(layout(), s);
        return eval_all(s, 0.0).f;
    }
    [[nodiscard]] Vector eval_algebraic(const PartitionedState& s) const {
        check_layout(layout(), s);
        return eval_all(s, 0.0).g;
    }
    [[nodiscard]] Vector eval_slow_continuous(const PartitionedState& s, Real t) const {
        check_layout(layout(), s);
        return eval_all(s, t).hc;
    }

    /// Residual used to pre-solve a long-term equilibrium. Defaults to h_c;
    /// models with states that are free at rest (integrators that only act
    /// past a threshold) replace those rows with a pinning equation.
    [[nodiscard]] virtual Vector eval_slow_init(const PartitionedState& s) const {
        return eval_all(s, 0.0).hc;
    }

    [[nodiscard]] virtual DiscreteTimers initial_timers(const PartitionedState& s) const {
        return DiscreteTimers(static_cast<std::size_t>(s.zd.size()));
    }

    [[nodiscard]] virtual DiscreteUpdate eval_discrete_update(const PartitionedState& s, Real /*t*/,
                                                              const DiscreteTimers& timers) const {
        return {s.zd, {}, timers};
    }

    /// True while some discrete or thresholded slow action is still due, so
    /// a run must not be declared converged.
    [[nodiscard]] virtual bool activity_pending(const PartitionedState& /*s*/, Real /*t*/) const {
        return false;
    }

    /// Fast variable whose local maxima define the Poincare section used by
    /// limit-cycle detection.
    [[nodiscard]] virtual std::size_t oscillation_probe() const { return 0; }

    /// Largest fast time constant, in seconds; sets the boundary-layer width.
    [[nodiscard]] virtual Real largest_fast_time_constant() const { return 1.0; }
};

}  // namespace qssa
