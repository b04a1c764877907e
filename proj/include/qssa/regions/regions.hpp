#pragma once

#include "qssa/algebra/manifold.hpp"
#include "qssa/sim/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace qssa::regions {

struct TransientSep {
    PartitionedState point;
    algebra::ManifoldPointClass cls;
    Real residual = 0.0;  // max(|f|, |g|) at the returned point
};

/// Equilibrium l(z_c, z_d) of the frozen transient model near `guess`, which
/// supplies z_c, z_d and the starting (x, y). Solver errors propagate.
[[nodiscard]] inline TransientSep find_transient_sep(const HybridModel& model, const PartitionedState& guess,
                                                     Real tol = 1e-10) {
    algebra::NewtonOptions opt;
    opt.tol = tol;
    TransientSep out;
    out.point = algebra::solve_equilibrium_fast(model, guess, opt);
    const auto r = model.eval_all(out.point, 0.0);
    out.residual = std::max(inf_norm(r.f), inf_norm(r.g));
    out.cls = algebra::classify_point(algebra::jacobian_blocks(model, out.point));
    return out;
}

enum class Membership { Inside, Outside, Undecided };

[[nodiscard]] inline std::string_view to_string(Membership m) {
    switch (m) {
        case Membership::Inside: return "inside";
        case Membership::Outside: return "outside";
        case Membership::Undecided: return "undecided";
    }
    return "?";
}

struct BasinOptions {
    Real horizon = 60.0;   // s of transient time
    Real rho = 1e-4;       // convergence radius
    Real escape = 1e3;     // divergence bound
    Real step = 0.01;
    Real newton_tol = 1e-8;

    void validate() const {
        if (!(rho > 0.0)) throw Error("basin radius rho must be > 0");
        if (!(horizon > 0.0)) throw Error("basin horizon must be > 0");
        if (!(escape > 0.0)) throw Error("basin escape bound must be > 0");
        if (!(step > 0.0)) throw Error("basin step must be > 0");
    }
};

/// Frozen (z_c, z_d) and the candidate (x, y), all carried in `point`.
struct BasinQuery {
    PartitionedState point;
    Real t = 0.0;  // clock value the frozen model is evaluated at
    BasinOptions options;
};

struct MembershipResult {
    Membership answer = Membership::Undecided;
    sim::Termination termination = sim::Termination::HorizonReached;
    Real final_distance = std::numeric_limits<Real>::quiet_NaN();
    Real end_time = 0.0;
    std::string detail;
};

/// Simulates the frozen transient model from the query point and compares
/// where it settles with `sep`.
[[nodiscard]] inline MembershipResult basin_membership(const HybridModel& model, const BasinQuery& q,
                                                       const PartitionedState& sep) {
    const auto& o = q.options;
    o.validate();
    sim::SimConfig cfg;
    cfg.h_transient = o.step;
    cfg.newton_tol = o.newton_tol;
    cfg.horizon = q.t + o.horizon;
    cfg.qss_start_time = q.t;
    cfg.divergence_bound = o.escape;

    MembershipResult out;
    sim::Trajectory traj;
    try {
        traj = sim::simulate_transient(model, {q.point, q.t, std::nullopt, true}, cfg);
    } catch (const Error& e) {
        out.detail = e.what();
        return out;
    }
    out.termination = traj.termination;
    out.end_time = traj.end_time();
    out.detail = traj.detail;
    const auto& layout = model.layout();
    const auto& fin = traj.final_state();
    if (fin.all_finite()) out.final_distance = state_distance(layout, fin, sep, {Partition::Fast, Partition::Algebraic});

    switch (traj.termination) {
        case sim::Termination::Diverged:
        case sim::Termination::Singular:
        case sim::Termination::SolverFailure:
        case sim::Termination::LimitCycle:
            out.answer = Membership::Outside;
            break;
        case sim::Termination::Converged:
            if (out.final_distance <= o.rho) {
                out.answer = Membership::Inside;
            } else if (out.final_distance > 10.0 * o.rho) {
                out.answer = Membership::Outside;
            }
            break;
        case sim::Termination::HorizonReached: {
            const Real rate = inf_norm(model.eval_all(fin, out.end_time).f);
            if (out.final_distance <= o.rho && rate < cfg.converge_tol) out.answer = Membership::Inside;
            break;
        }
    }
    return out;
}

enum class CellClass { Inside, Outside, Undecided, Singular };

[[nodiscard]] inline std::string_view to_string(CellClass c) {
    switch (c) {
        case CellClass::Inside: return "inside";
        case CellClass::Outside: return "outside";
        case CellClass::Undecided: return "undecided";
        case CellClass::Singular: return "singular";
    }
    return "?";
}

struct SliceSpec {
    std::string axis1;
    std::string axis2;
    Real lo1 = 0.0, hi1 = 0.0, lo2 = 0.0, hi2 = 0.0;
    int n1 = 1, n2 = 1;
};

/// Cell classes of a 2-D slice through fast-variable space; cell (i, j) has
/// index j * n1 + i and its centre is lo + (i + 1/2) * width.
struct BasinSliceGrid {
    SliceSpec spec;
    std::vector<CellClass> cells;
    PartitionedState sep;
    std::optional<std::pair<int, int>> marked_cell;
    std::optional<std::pair<Real, Real>> marked_point;
    std::optional<CellClass> marked_class;

    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(spec.n1) + static_cast<std::size_t>(i);
    }
    [[nodiscard]] CellClass at(int i, int j) const { return cells.at(index(i, j)); }
    [[nodiscard]] Real center1(int i) const { return spec.lo1 + (i + 0.5) * (spec.hi1 - spec.lo1) / spec.n1; }
    [[nodiscard]] Real center2(int j) const { return spec.lo2 + (j + 0.5) * (spec.hi2 - spec.lo2) / spec.n2; }

    /// Cell containing (a, b), if inside the bounds.
    [[nodiscard]] std::optional<std::pair<int, int>> cell_of(Real a, Real b) const {
        const Real u = (a - spec.lo1) / (spec.hi1 - spec.lo1) * spec.n1;
        const Real v = (b - spec.lo2) / (spec.hi2 - spec.lo2) * spec.n2;
        if (!(u >= 0.0 && u <= spec.n1 && v >= 0.0 && v <= spec.n2)) return std::nullopt;
        return std::pair{std::min(static_cast<int>(u), spec.n1 - 1), std::min(static_cast<int>(v), spec.n2 - 1)};
    }
};

/// Classification of one state, used for grid cells and marked points.
[[nodiscard]] inline CellClass classify_state(const HybridModel& model, const PartitionedState& point,
                                              const PartitionedState& sep, Real t, const BasinOptions& opt) {
    const auto r = basin_membership(model, {point, t, opt}, sep);
    if (r.termination == sim::Termination::Singular) return CellClass::Singular;
    if (r.termination == sim::Termination::SolverFailure && r.end_time <= t) return CellClass::Undecided;
    switch (r.answer) {
        case Membership::Inside: return CellClass::Inside;
        case Membership::Outside: return CellClass::Outside;
        case Membership::Undecided: return CellClass::Undecided;
    }
    return CellClass::Undecided;
}

namespace detail {

/// Runs job(k) for k in [0, n) on up to `threads` workers.
template <class Job>
void parallel_for(std::size_t n, int threads, Job&& job) {
    const auto workers = static_cast<std::size_t>(std::clamp(threads, 1, 256));
    if (workers == 1 || n <= 1) {
        for (std::size_t k = 0; k < n; ++k) job(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < n; k = next++) job(k);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Samples basin membership over a grid of two fast variables; every other
/// coordinate stays at the SEP and y is re-solved per cell. `marked` is a
/// state whose axis values are located on the grid and classified exactly.
[[nodiscard]] inline BasinSliceGrid sample_basin_slice(const HybridModel& model, const PartitionedState& sep,
                                                       const SliceSpec& spec, Real t = 0.0,
                                                       const BasinOptions& opt = {}, int threads = 1,
                                                       const std::optional<PartitionedState>& marked = std::nullopt) {
    const auto& layout = model.layout();
    const Slot a1 = layout.at(spec.axis1);
    const Slot a2 = layout.at(spec.axis2);
    if (a1.partition != Partition::Fast || a2.partition != Partition::Fast) {
        throw LayoutError("slice axes must be fast variables");
    }
    if (spec.axis1 == spec.axis2) throw LayoutError("slice axes must be distinct");
    if (spec.n1 < 1 || spec.n2 < 1) throw Error("slice resolution must be >= 1");
    if (!(spec.hi1 > spec.lo1) || !(spec.hi2 > spec.lo2)) throw Error("slice bounds must be increasing");

    BasinSliceGrid grid;
    grid.spec = spec;
    grid.sep = sep;
    grid.cells.assign(static_cast<std::size_t>(spec.n1) * static_cast<std::size_t>(spec.n2), CellClass::Undecided);

    detail::parallel_for(grid.cells.size(), threads, [&](std::size_t k) {
        const int i = static_cast<int>(k % static_cast<std::size_t>(spec.n1));
        const int j = static_cast<int>(k / static_cast<std::size_t>(spec.n1));
        PartitionedState p = sep;
        p[a1] = grid.center1(i);
        p[a2] = grid.center2(j);
        CellClass c = CellClass::Undecided;
        try {
            c = classify_state(model, p, sep, t, opt);
        } catch (const Error&) {
            c = CellClass::Undecided;
        }
        grid.cells[k] = c;
    });

    if (marked) {
        grid.marked_point = std::pair{(*marked)[a1], (*marked)[a2]};
        grid.marked_cell = grid.cell_of(grid.marked_point->first, grid.marked_point->second);
        grid.marked_class = classify_state(model, *marked, sep, t, opt);
    }
    return grid;
}

}  // namespace qssa::regions
