#pragma once

#include "qssa/regions/regions.hpp"
#include "qssa/sim/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qssa::checker {

using regions::Membership;

inline constexpr Real kNaN = std::numeric_limits<Real>::quiet_NaN();

struct SingularityReport {
    bool pass = true;
    std::optional<Real> fail_time;
};

struct GammaSReport {
    bool pass = true;
    std::optional<Real> first_violation;
    Real violation_margin = kNaN;
    Real worst_margin = kNaN;
    Real step = 0.0;
    std::size_t samples = 0;
};

struct InitialAttractionReport {
    bool pass = false;
    Membership answer = Membership::Undecided;
    Real time = 0.0;
    std::string detail;
};

struct EventVerdict {
    Real time = 0.0;
    std::vector<std::string> devices;
    Membership answer = Membership::Undecided;
    std::string detail;
};

struct GapSeries {
    std::vector<Real> times;
    std::vector<Real> slow;  // sup over compared slow variables
    std::vector<Real> fast;  // NaN inside boundary layers
    std::vector<std::string> slow_names;
    std::vector<Real> slow_sup_per_variable;
    Real sup_slow = 0.0;
    Real sup_slow_time = kNaN;
    Real sup_fast = 0.0;
    Real sup_fast_time = kNaN;
    Real boundary_layer = 0.0;
};

enum class OmegaLimit { SameSep, LtDiverged, LtLimitCycle, QssDiverged, Mismatch, Undecided };

[[nodiscard]] inline std::string_view to_string(OmegaLimit o) {
    switch (o) {
        case OmegaLimit::SameSep: return "same-SEP";
        case OmegaLimit::LtDiverged: return "LT-diverged";
        case OmegaLimit::LtLimitCycle: return "LT-limit-cycle";
        case OmegaLimit::QssDiverged: return "QSS-diverged";
        case OmegaLimit::Mismatch: return "mismatch";
        case OmegaLimit::Undecided: return "undecided";
    }
    return "?";
}

struct OmegaReport {
    OmegaLimit verdict = OmegaLimit::Undecided;
    Real final_distance = kNaN;
    Real tol = 1e-4;
};

// -----------------------------------------------------------------------------
// Premise checks
// -----------------------------------------------------------------------------

/// Fails at the time the QSS run stopped on the singular set.
[[nodiscard]] inline SingularityReport check_singularity(const sim::Trajectory& qss) {
    SingularityReport r;
    if (qss.termination == sim::Termination::Singular) {
        r.pass = false;
        r.fail_time = qss.empty() ? 0.0 : qss.end_time();
    }
    return r;
}

/// Classifies every QSS sample; pass iff every one lies on Gamma_s.
[[nodiscard]] inline GammaSReport check_gamma_s_along(const HybridModel& model, const sim::Trajectory& qss,
                                                      const algebra::ClassifyOptions& opt = {}) {
    GammaSReport r;
    r.step = qss.step;
    r.samples = qss.size();
    for (std::size_t k = 0; k < qss.size(); ++k) {
        algebra::ManifoldPointClass c;
        try {
            c = algebra::classify_point(algebra::jacobian_blocks(model, qss.states[k], qss.times[k]), opt);
        } catch (const SolverError&) {
            c.gamma_s_member = false;
            c.margin = kNaN;
        }
        if (!std::isnan(c.margin) && (std::isnan(r.worst_margin) || c.margin > r.worst_margin)) {
            r.worst_margin = c.margin;
        }
        if (!c.gamma_s_member && r.pass) {
            r.pass = false;
            r.first_violation = qss.times[k];
            r.violation_margin = c.margin;
        }
    }
    return r;
}

/// Basin membership of the long-term start in the SEP of its frozen
/// transient model, found from the QSS start.
[[nodiscard]] inline InitialAttractionReport check_initial_attraction(const HybridModel& model,
                                                                      const PartitionedState& lt_init,
                                                                      const PartitionedState& qss_init, Real t = 0.0,
                                                                      const regions::BasinOptions& opt = {}) {
    InitialAttractionReport r;
    r.time = t;
    const auto sep = regions::find_transient_sep(model, qss_init);
    if (!sep.cls.gamma_s_member) r.detail = "initial transient equilibrium is not a verified SEP";
    PartitionedState q = lt_init;
    q.zc = qss_init.zc;
    q.zd = qss_init.zd;
    const auto m = regions::basin_membership(model, {q, t, opt}, sep.point);
    r.answer = m.answer;
    r.pass = m.answer == Membership::Inside;
    if (r.detail.empty()) r.detail = m.detail;
    return r;
}

/// For each distinct event time at or after `from_time`: freezes the
/// post-jump (z_c, z_d), finds the matching SEP and tests the post-jump
/// (x, y) for membership in its basin.
[[nodiscard]] inline std::vector<EventVerdict> check_consistent_attraction(const HybridModel& model,
                                                                           const sim::Trajectory& lt,
                                                                           Real from_time = -1e300,
                                                                           const regions::BasinOptions& opt = {},
                                                                           int threads = 1) {
    std::vector<EventVerdict> out;
    for (const auto& ev : lt.events) {
        if (ev.t < from_time - 1e-9) continue;
        if (!out.empty() && std::abs(out.back().time - ev.t) <= 1e-9) {
            out.back().devices.push_back(ev.device);
            continue;
        }
        EventVerdict v;
        v.time = ev.t;
        v.devices.push_back(ev.device);
        out.push_back(std::move(v));
    }
    regions::detail::parallel_for(out.size(), threads, [&](std::size_t k) {
        auto& v = out[k];
        const std::size_t idx = lt.index_at(v.time);
        if (idx >= lt.size()) {
            v.detail = "no post-jump sample";
            return;
        }
        const PartitionedState& post = lt.states[idx];
        try {
            const auto sep = regions::find_transient_sep(model, post);
            const auto m = regions::basin_membership(model, {post, v.time, opt}, sep.point);
            v.answer = m.answer;
            v.detail = sep.cls.gamma_s_member ? m.detail : "equilibrium not a verified SEP; " + m.detail;
        } catch (const Error& e) {
            v.answer = Membership::Undecided;
            v.detail = std::string("SEP solve failed: ") + e.what();
        }
    });
    return out;
}

// -----------------------------------------------------------------------------
// Trajectory comparison
// -----------------------------------------------------------------------------

struct CompareOptions {
    std::vector<std::string> slow_names;  // empty: every slow continuous variable
    Real boundary_layer_factor = 5.0;
};

/// Gap series on the coarser of the two grids, restricted to the common
/// time range. The fast gap skips boundary layers after the start and after
/// each event of either run.
[[nodiscard]] inline GapSeries compare_trajectories(const HybridModel& model, const sim::Trajectory& lt,
                                                    const sim::Trajectory& qss, const CompareOptions& opt = {}) {
    if (lt.empty() || qss.empty()) throw SolverError(SolverFailure::EmptyOverlap, "empty trajectory");
    const Real t_lo = std::max(lt.start_time(), qss.start_time());
    const Real t_hi = std::min(lt.end_time(), qss.end_time());
    if (t_lo > t_hi + 1e-12) throw SolverError(SolverFailure::EmptyOverlap, "trajectories do not overlap in time");

    const auto& layout = model.layout();
    std::vector<std::size_t> slow_idx;
    GapSeries g;
    if (opt.slow_names.empty()) {
        for (std::size_t i = 0; i < layout.size(Partition::SlowContinuous); ++i) slow_idx.push_back(i);
    } else {
        for (const auto& n : opt.slow_names) {
            const Slot s = layout.at(n);
            if (s.partition != Partition::SlowContinuous) throw LayoutError("'" + n + "' is not a slow variable");
            slow_idx.push_back(s.index);
        }
    }
    for (auto i : slow_idx) g.slow_names.push_back(layout.name(Partition::SlowContinuous, i));
    g.slow_sup_per_variable.assign(slow_idx.size(), 0.0);

    const bool lt_coarser = lt.step > qss.step;
    const sim::Trajectory& coarse = lt_coarser ? lt : qss;
    const sim::Trajectory& fine = lt_coarser ? qss : lt;

    const Real eps = std::max(lt.epsilon_scale, qss.epsilon_scale);
    g.boundary_layer = opt.boundary_layer_factor * model.largest_fast_time_constant() * eps;
    std::vector<Real> layer_starts{lt.start_time(), qss.start_time()};
    for (const auto& e : lt.events) layer_starts.push_back(e.t);
    for (const auto& e : qss.events) layer_starts.push_back(e.t);
    auto in_layer = [&](Real t) {
        return std::any_of(layer_starts.begin(), layer_starts.end(),
                           [&](Real s) { return t >= s - 1e-12 && t < s + g.boundary_layer; });
    };

    for (std::size_t k = 0; k < coarse.size(); ++k) {
        const Real t = coarse.times[k];
        if (t < t_lo - 1e-12 || t > t_hi + 1e-12) continue;
        const PartitionedState& a = coarse.states[k];
        const PartitionedState b = fine.interpolate(t);
        Real slow = 0.0;
        for (std::size_t j = 0; j < slow_idx.size(); ++j) {
            const auto i = static_cast<Eigen::Index>(slow_idx[j]);
            const Real d = std::abs(wrapped_difference(a.zc[i], b.zc[i], layout.is_angle(Partition::SlowContinuous, slow_idx[j])));
            slow = std::max(slow, d);
            g.slow_sup_per_variable[j] = std::max(g.slow_sup_per_variable[j], d);
        }
        Real fast = kNaN;
        if (!in_layer(t)) {
            fast = state_distance(layout, a, b, {Partition::Fast});
            if (std::isnan(g.sup_fast_time) || fast > g.sup_fast) {
                g.sup_fast = fast;
                g.sup_fast_time = t;
            }
        }
        if (std::isnan(g.sup_slow_time) || slow > g.sup_slow) {
            g.sup_slow = slow;
            g.sup_slow_time = t;
        }
        g.times.push_back(t);
        g.slow.push_back(slow);
        g.fast.push_back(fast);
    }
    if (g.times.empty()) throw SolverError(SolverFailure::EmptyOverlap, "no common samples");
    return g;
}

/// First time after the initial boundary layer at which the slow gap
/// exceeds `factor` times its running maximum over all earlier samples
/// (bounded below by `floor`).
[[nodiscard]] inline std::optional<Real> gap_blowup_time(const GapSeries& g, Real factor = 10.0, Real floor = 1e-8) {
    if (g.times.empty()) return std::nullopt;
    const Real t_start = g.times.front() + g.boundary_layer;
    Real running = g.slow.front();
    for (std::size_t k = 1; k < g.times.size(); ++k) {
        if (g.times[k] >= t_start && g.slow[k] > factor * std::max(running, floor)) return g.times[k];
        running = std::max(running, g.slow[k]);
    }
    return std::nullopt;
}

[[nodiscard]] inline bool is_failure(sim::Termination t) {
    return t == sim::Termination::Diverged || t == sim::Termination::Singular ||
           t == sim::Termination::SolverFailure;
}

/// Terminal behaviour of both runs; same-SEP iff both converged to states
/// within `tol` on z_c, x and y.
[[nodiscard]] inline OmegaReport compare_omega_limits(const HybridModel& model, const sim::Trajectory& lt,
                                                      const sim::Trajectory& qss, Real tol = 1e-4) {
    OmegaReport r;
    r.tol = tol;
    if (!lt.empty() && !qss.empty()) {
        r.final_distance = state_distance(model.layout(), lt.final_state(), qss.final_state(),
                                          {Partition::SlowContinuous, Partition::Fast, Partition::Algebraic});
    }
    if (is_failure(lt.termination)) {
        r.verdict = OmegaLimit::LtDiverged;
    } else if (lt.termination == sim::Termination::LimitCycle) {
        r.verdict = OmegaLimit::LtLimitCycle;
    } else if (is_failure(qss.termination) || qss.termination == sim::Termination::LimitCycle) {
        r.verdict = OmegaLimit::QssDiverged;
    } else if (lt.termination == sim::Termination::Converged && qss.termination == sim::Termination::Converged) {
        const bool same_zd = lt.final_state().zd == qss.final_state().zd;
        r.verdict = same_zd && r.final_distance <= tol ? OmegaLimit::SameSep : OmegaLimit::Mismatch;
    } else {
        r.verdict = OmegaLimit::Undecided;
    }
    return r;
}

// -----------------------------------------------------------------------------
// Orchestration
// -----------------------------------------------------------------------------

struct CheckSelection {
    bool singularity = true;
    bool gamma_s = true;
    bool initial_attraction = true;
    bool consistent_attraction = true;
    bool trajectory_gap = true;
    bool omega_limit = true;
};

struct DiagnoseOptions {
    Real delta = 1e-2;
    Real omega_tol = 1e-4;
    regions::BasinOptions basin;
    algebra::ClassifyOptions classify;
    CheckSelection checks;
    int threads = 1;
};

struct VerdictReport {
    SingularityReport s1_singularity;
    GammaSReport gamma_s_along_qss;
    InitialAttractionReport initial_attraction;
    std::vector<EventVerdict> consistent_attraction;
    Real trajectory_gap = 0.0;
    Real trajectory_gap_time = kNaN;
    Real fast_gap = 0.0;
    Real fast_gap_time = kNaN;
    OmegaReport omega_limit;
    bool valid = false;
    std::string failed_condition;  // empty when valid

    // Run metadata.
    Real qss_start_time = 0.0;
    Real epsilon_scale = 1.0;
    Real delta = 1e-2;
    Real h_longterm = 0.0;
    Real h_qss = 0.0;
    sim::Termination lt_termination = sim::Termination::HorizonReached;
    sim::Termination qss_termination = sim::Termination::HorizonReached;
    Real lt_end_time = 0.0;
    Real qss_end_time = 0.0;
    std::size_t lt_events = 0;
    std::size_t qss_events = 0;
    std::optional<Real> first_outside_event;
    std::optional<Real> gap_blowup;
    std::vector<std::string> notes;
    CheckSelection checks;

    [[nodiscard]] std::string overall() const {
        return valid ? "QSS-valid" : "QSS-invalid: " + failed_condition;
    }
};

struct DiagnoseResult {
    VerdictReport report;
    sim::Trajectory lt;
    sim::Trajectory qss;
    std::optional<GapSeries> gaps;
};

/// Concatenates b onto a; b's first sample repeats a's last one.
[[nodiscard]] inline sim::Trajectory join(sim::Trajectory a, const sim::Trajectory& b) {
    const std::size_t skip = (!a.empty() && !b.empty() && std::abs(b.start_time() - a.end_time()) <= 1e-9) ? 1 : 0;
    for (std::size_t k = skip; k < b.size(); ++k) {
        a.times.push_back(b.times[k]);
        a.states.push_back(b.states[k]);
    }
    a.events.insert(a.events.end(), b.events.begin(), b.events.end());
    a.termination = b.termination;
    a.detail = b.detail;
    a.final_timers = b.final_timers;
    return a;
}

/// Runs the long-term model from `init` and the QSS model from the projected
/// long-term state at cfg.qss_start_time, then evaluates every selected check.
[[nodiscard]] inline DiagnoseResult diagnose(const HybridModel& model, const PartitionedState& init,
                                             const sim::SimConfig& cfg, const DiagnoseOptions& opt = {}) {
    cfg.validate();
    DiagnoseResult out;
    VerdictReport& rep = out.report;
    rep.checks = opt.checks;
    rep.epsilon_scale = cfg.epsilon_scale;
    rep.delta = opt.delta;
    rep.h_longterm = cfg.h_longterm;
    rep.h_qss = cfg.h_qss;

    sim::SimConfig head = cfg;
    head.horizon = cfg.qss_start_time;
    head.stop_when_converged = false;
    const auto lt1 = sim::simulate_longterm(model, {init, 0.0, std::nullopt, false}, head);
    const Real t_q = lt1.end_time();
    rep.qss_start_time = t_q;
    if (t_q < cfg.qss_start_time - 1e-9) {
        rep.notes.push_back("long-term run stopped before the QSS start time: " + std::string(to_string(lt1.termination)));
        out.lt = lt1;
    } else {
        const auto lt2 = sim::simulate_longterm(model, {lt1.final_state(), t_q, lt1.final_timers}, cfg);
        out.lt = join(lt1, lt2);
    }

    const PartitionedState lt_at_q = lt1.final_state();
    PartitionedState qss_init = lt_at_q;
    bool qss_projected = true;
    try {
        qss_init = sim::qss_project(model, lt_at_q);
    } catch (const SolverError& e) {
        qss_projected = false;
        rep.notes.push_back(std::string("QSS projection failed: ") + e.what());
    }
    out.qss = sim::simulate_qss(model, {qss_init, t_q, lt1.final_timers}, cfg);

    rep.lt_termination = out.lt.termination;
    rep.qss_termination = out.qss.termination;
    rep.lt_end_time = out.lt.end_time();
    rep.qss_end_time = out.qss.end_time();
    rep.lt_events = out.lt.events.size();
    rep.qss_events = out.qss.events.size();

    if (opt.checks.singularity) rep.s1_singularity = check_singularity(out.qss);
    if (opt.checks.gamma_s) rep.gamma_s_along_qss = check_gamma_s_along(model, out.qss, opt.classify);
    if (opt.checks.initial_attraction) {
        if (qss_projected) {
            try {
                rep.initial_attraction = check_initial_attraction(model, lt_at_q, qss_init, t_q, opt.basin);
            } catch (const Error& e) {
                rep.initial_attraction.detail = std::string("SEP solve failed: ") + e.what();
            }
        } else {
            rep.initial_attraction.detail = "no QSS start point";
        }
        rep.initial_attraction.time = t_q;
    } else {
        rep.initial_attraction.pass = true;
        rep.initial_attraction.answer = Membership::Inside;
    }
    if (opt.checks.consistent_attraction) {
        rep.consistent_attraction = check_consistent_attraction(model, out.lt, t_q, opt.basin, opt.threads);
        for (const auto& v : rep.consistent_attraction) {
            if (v.answer == Membership::Outside) {
                rep.first_outside_event = v.time;
                break;
            }
        }
    }

    if (opt.checks.trajectory_gap || opt.checks.omega_limit) {
        sim::Trajectory lt_tail = out.lt;
        const std::size_t k0 = out.lt.index_at(t_q);
        if (k0 < out.lt.size()) {
            lt_tail.times.assign(out.lt.times.begin() + static_cast<std::ptrdiff_t>(k0), out.lt.times.end());
            lt_tail.states.assign(out.lt.states.begin() + static_cast<std::ptrdiff_t>(k0), out.lt.states.end());
            lt_tail.events.clear();
            for (const auto& e : out.lt.events) {
                if (e.t >= t_q - 1e-9) lt_tail.events.push_back(e);
            }
        }
        try {
            out.gaps = compare_trajectories(model, lt_tail, out.qss);
            rep.trajectory_gap = out.gaps->sup_slow;
            rep.trajectory_gap_time = out.gaps->sup_slow_time;
            rep.fast_gap = out.gaps->sup_fast;
            rep.fast_gap_time = out.gaps->sup_fast_time;
            rep.gap_blowup = gap_blowup_time(*out.gaps);
        } catch (const SolverError& e) {
            rep.notes.push_back(std::string("trajectory comparison failed: ") + e.what());
            rep.trajectory_gap = kNaN;
        }
    }
    if (opt.checks.omega_limit) rep.omega_limit = compare_omega_limits(model, out.lt, out.qss, opt.omega_tol);

    auto any = [&](Membership m) {
        return std::any_of(rep.consistent_attraction.begin(), rep.consistent_attraction.end(),
                           [&](const EventVerdict& v) { return v.answer == m; });
    };
    if (any(Membership::Outside)) {
        rep.failed_condition = "consistent-attraction";
    } else if (!rep.s1_singularity.pass) {
        rep.failed_condition = "singularity";
    } else if (!rep.gamma_s_along_qss.pass) {
        rep.failed_condition = "gamma-s";
    } else if (rep.initial_attraction.answer == Membership::Outside) {
        rep.failed_condition = "initial-attraction";
    } else if (any(Membership::Undecided) || rep.initial_attraction.answer == Membership::Undecided) {
        rep.failed_condition = "unverified";
    } else if (opt.checks.omega_limit && rep.omega_limit.verdict != OmegaLimit::SameSep) {
        rep.failed_condition = "omega-limit";
    } else if (opt.checks.trajectory_gap && !(rep.trajectory_gap <= opt.delta)) {
        rep.failed_condition = "trajectory-gap";
    }
    rep.valid = rep.failed_condition.empty();
    return out;
}

}  // namespace qssa::checker
