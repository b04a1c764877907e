#pragma once

// Device models of the long-term stability model. Each device exposes its
// equations as free functions of plain inputs so that they can be checked
// one at a time; SystemModel stacks them into h_c, f and g.

#include "qssa/core.hpp"
#include "qssa/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace qssa::net {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw LayoutError(what);
}

// =============================================================================
// Synchronous generator (fourth-order two-axis model)
// =============================================================================

struct GeneratorParams {
    std::string id;
    int bus = 0;
    Real omega_b = 2.0 * std::numbers::pi * 60.0;
    Real m = 10.0;  // 2H, s
    Real d = 0.0;
    Real x_d = 1.8;
    Real x_d_prime = 0.3;
    Real x_q = 1.7;
    Real x_q_prime = 0.55;
    Real r_a = 0.0;
    Real t_d0_prime = 6.0;
    Real t_q0_prime = 0.5;
    Real k_omega = 0.0;
    Real k_p = 0.0;
    Real p0 = 0.0;                 // dispatched active power, p.u.
    std::optional<Real> p_m0;      // used when no governor drives p_m; solved at initialization if unset
    std::optional<Real> v_f0;      // used when no AVR drives v_f; solved at initialization if unset
    // f_s(e'_q) = e'_q + sat_a * exp(sat_b * e'_q)
    Real sat_a = 0.0;
    Real sat_b = 0.0;

    void validate() const {
        require(m > 0.0, "generator " + id + ": m must be > 0");
        require(t_d0_prime > 0.0, "generator " + id + ": t_d0_prime must be > 0");
        require(t_q0_prime > 0.0, "generator " + id + ": t_q0_prime must be > 0");
        require(x_d_prime > 0.0 && x_d >= x_d_prime, "generator " + id + ": need x_d >= x_d_prime > 0");
        require(x_q_prime > 0.0 && x_q >= x_q_prime, "generator " + id + ": need x_q >= x_q_prime > 0");
    }
};

struct GeneratorStates {
    Real delta = 0.0;
    Real omega = 1.0;
    Real e_q = 1.0;
    Real e_d = 0.0;
};

/// Terminal quantities in the rotor frame. The stator equations
///   0 = v_q + r_a i_q - e'_q + x'_d i_d
///   0 = v_d + r_a i_d - e'_d - x'_q i_q
/// are linear in (i_d, i_q) and solved in closed form.
struct StatorSolution {
    Real v_d = 0.0;
    Real v_q = 0.0;
    Real i_d = 0.0;
    Real i_q = 0.0;
    Real p_e = 0.0;
};

[[nodiscard]] inline StatorSolution generator_stator(const GeneratorParams& g, const GeneratorStates& s,
                                                     Real v, Real theta) {
    StatorSolution out;
    out.v_d = v * std::sin(s.delta - theta);
    out.v_q = v * std::cos(s.delta - theta);
    const Real a = s.e_q - out.v_q;
    const Real b = s.e_d - out.v_d;
    const Real det = -g.x_d_prime * g.x_q_prime - g.r_a * g.r_a;
    out.i_d = (-g.x_q_prime * a - g.r_a * b) / det;
    out.i_q = (g.x_d_prime * b - g.r_a * a) / det;
    out.p_e = (out.v_q + g.r_a * out.i_q) * out.i_q + (out.v_d + g.r_a * out.i_d) * out.i_d;
    return out;
}

[[nodiscard]] inline Real generator_saturation(const GeneratorParams& g, Real e_q) {
    return e_q + g.sat_a * std::exp(g.sat_b * e_q);
}

/// Effective field voltage v_f* = v_f + K_w (w - 1) - K_p (p - p0).
[[nodiscard]] inline Real generator_field_drive(const GeneratorParams& g, Real omega, Real v_f, Real p) {
    return v_f + g.k_omega * (omega - 1.0) - g.k_p * (p - g.p0);
}

struct GeneratorRates {
    Real delta, omega, e_q, e_d;
};

[[nodiscard]] inline GeneratorRates generator_rates(const GeneratorParams& g, const GeneratorStates& s,
                                                    const StatorSolution& st, Real p_m, Real v_f, Real p) {
    return {
        g.omega_b * (s.omega - 1.0),
        (p_m - st.p_e - g.d * (s.omega - 1.0)) / g.m,
        (-generator_saturation(g, s.e_q) - (g.x_d - g.x_d_prime) * st.i_d +
         generator_field_drive(g, s.omega, v_f, p)) /
            g.t_d0_prime,
        (-s.e_d + (g.x_q - g.x_q_prime) * st.i_q) / g.t_q0_prime,
    };
}

/// Residuals 0 = v_d i_d + v_q i_q - p and 0 = v_q i_d - v_d i_q - q.
struct PowerResiduals {
    Real p, q;
};

[[nodiscard]] inline PowerResiduals generator_power_residuals(const StatorSolution& st, Real p, Real q) {
    return {st.v_d * st.i_d + st.v_q * st.i_q - p, st.v_q * st.i_d - st.v_d * st.i_q - q};
}

// =============================================================================
// Automatic voltage regulator (DC exciter with rate feedback)
// =============================================================================

struct AvrParams {
    std::string id;
    std::string generator;
    Real k_a = 200.0;
    Real t_a = 0.02;
    Real k_f = 0.002;
    Real t_f = 1.0;
    Real k_e = 1.0;
    Real t_e = 0.2;
    Real t_r = 0.001;
    Real a_e = 0.0006;
    Real b_e = 0.9;
    Real v_r_max = 5.0;
    Real v_r_min = -5.0;
    std::optional<Real> v_ref0;  // solved at initialization if unset

    void validate() const {
        require(t_a > 0.0 && t_f > 0.0 && t_e > 0.0 && t_r > 0.0,
                "avr " + id + ": time constants must be > 0");
        require(v_r_min < v_r_max, "avr " + id + ": need v_r_min < v_r_max");
    }
};

struct AvrStates {
    Real v_m = 1.0;
    Real v_r1 = 0.0;
    Real v_r2 = 0.0;
    Real v_f = 1.0;
};

[[nodiscard]] inline Real avr_regulator_output(const AvrParams& a, Real v_r1) {
    return std::clamp(v_r1, a.v_r_min, a.v_r_max);
}

/// Ceiling function S_e(v_f) = A_e exp(B_e |v_f|).
[[nodiscard]] inline Real avr_ceiling(const AvrParams& a, Real v_f) {
    return a.a_e * std::exp(a.b_e * std::abs(v_f));
}

struct AvrRates {
    Real v_m, v_r1, v_r2, v_f;
};

[[nodiscard]] inline AvrRates avr_rates(const AvrParams& a, const AvrStates& s, Real v_bus, Real v_ref) {
    const Real rate_fb = a.k_f / a.t_f * s.v_f;
    return {
        (v_bus - s.v_m) / a.t_r,
        (a.k_a * (v_ref - s.v_m - s.v_r2 - rate_fb) - s.v_r1) / a.t_a,
        -(rate_fb + s.v_r2) / a.t_f,
        -(s.v_f * (a.k_e + avr_ceiling(a, s.v_f)) - avr_regulator_output(a, s.v_r1)) / a.t_e,
    };
}

// =============================================================================
// Turbine governor
// =============================================================================

struct TurbineGovernorParams {
    std::string id;
    std::string generator;
    Real r = 0.05;
    Real p_max = 5.0;
    Real p_min = 0.0;
    Real t_s = 0.4;
    Real t_c = 0.45;
    Real t_3 = 0.0;
    Real t_4 = 12.0;
    Real t_5 = 50.0;
    Real omega_ref0 = 1.0;
    std::optional<Real> p_order;  // solved at initialization if unset

    void validate() const {
        require(t_s > 0.0 && t_c > 0.0 && t_5 > 0.0, "tg " + id + ": t_s, t_c, t_5 must be > 0");
        require(p_min < p_max, "tg " + id + ": need p_min < p_max");
        require(r > 0.0, "tg " + id + ": droop r must be > 0");
    }
};

struct TgStates {
    Real x_g1 = 0.0;
    Real x_g2 = 0.0;
    Real x_g3 = 0.0;
};

[[nodiscard]] inline Real tg_power_input(const TurbineGovernorParams& tg, Real omega, Real omega_ref) {
    const Real p_star = tg.p_order.value_or(0.0) + (omega_ref - omega) / tg.r;
    return std::clamp(p_star, tg.p_min, tg.p_max);
}

[[nodiscard]] inline Real tg_mechanical_power(const TurbineGovernorParams& tg, const TgStates& s) {
    return s.x_g3 + tg.t_4 / tg.t_5 * (s.x_g2 + tg.t_3 / tg.t_c * s.x_g1);
}

struct TgRates {
    Real x_g1, x_g2, x_g3;
};

[[nodiscard]] inline TgRates tg_rates(const TurbineGovernorParams& tg, const TgStates& s, Real omega,
                                      Real omega_ref) {
    const Real p_in = tg_power_input(tg, omega, omega_ref);
    return {
        (p_in - s.x_g1) / tg.t_s,
        ((1.0 - tg.t_3 / tg.t_c) * s.x_g1 - s.x_g2) / tg.t_c,
        ((1.0 - tg.t_4 / tg.t_5) * (s.x_g2 + tg.t_3 / tg.t_c * s.x_g1) - s.x_g3) / tg.t_5,
    };
}

/// Steady-state governor states for a given power input.
[[nodiscard]] inline TgStates tg_equilibrium(const TurbineGovernorParams& tg, Real p_in) {
    TgStates s;
    s.x_g1 = p_in;
    s.x_g2 = (1.0 - tg.t_3 / tg.t_c) * p_in;
    s.x_g3 = (1.0 - tg.t_4 / tg.t_5) * p_in;
    return s;
}

// =============================================================================
// Over-excitation limiter
// =============================================================================

struct OxlParams {
    std::string id;
    std::string generator;
    Real t_0 = 10.0;      // integrator time constant, s
    Real i_f_lim = 2.5;
    Real t_delay = 20.0;  // activation delay from the start of the run, s
    Real x_d = 1.8;       // estimated reactances
    Real x_q = 1.7;
    Real v_oxl_max = std::numeric_limits<Real>::infinity();

    void validate() const {
        require(t_0 > 0.0, "oxl " + id + ": t_0 must be > 0");
        require(t_delay >= 0.0, "oxl " + id + ": t_delay must be >= 0");
        require(x_q > 0.0, "oxl " + id + ": x_q must be > 0");
        require(v_oxl_max >= 0.0, "oxl " + id + ": v_oxl_max must be >= 0");
    }
};

/// Field current estimated from the terminal operating point,
///   i_f = |E_Q| + (x_d/x_q - 1) (g_q (v + g_q) + g_p^2) / |E_Q|,
///   |E_Q| = sqrt((v + g_q)^2 + g_p^2),  g_p = x_q p / v,  g_q = x_q q / v.
[[nodiscard]] inline Real oxl_field_current(const OxlParams& o, Real v, Real p, Real q) {
    const Real gp = o.x_q * p / v;
    const Real gq = o.x_q * q / v;
    const Real eq = std::sqrt((v + gq) * (v + gq) + gp * gp);
    return eq + (o.x_d / o.x_q - 1.0) * (gq * (v + gq) + gp * gp) / eq;
}

/// Rate of the limiter integrator; zero before activation and while the
/// field current is within its limit. Near the optional output ceiling the
/// rate tapers linearly to zero over `kOxlTaper` so the right-hand side
/// stays continuous in v_oxl.
inline constexpr Real kOxlTaper = 0.01;

[[nodiscard]] inline Real oxl_rate(const OxlParams& o, Real v_oxl, Real i_f, Real t) {
    if (t < o.t_delay || i_f <= o.i_f_lim) return 0.0;
    Real rate = (i_f - o.i_f_lim) / o.t_0;
    if (std::isfinite(o.v_oxl_max)) rate *= std::clamp((o.v_oxl_max - v_oxl) / kOxlTaper, 0.0, 1.0);
    return rate;
}

// =============================================================================
// Exponential recovery load
// =============================================================================

struct ErlParams {
    std::string id;
    int bus = 0;
    Real k_p = 100.0;  // percent
    Real k_q = 100.0;
    Real t_p = 60.0;
    Real t_q = 60.0;
    Real alpha_s = 0.0;
    Real alpha_t = 2.0;
    Real beta_s = 0.0;
    Real beta_t = 2.0;
    Real p_l0 = 0.0;
    Real q_l0 = 0.0;
    std::optional<Real> v0;  // taken from the initial power flow if unset

    void validate() const {
        require(t_p > 0.0 && t_q > 0.0, "erl " + id + ": t_p, t_q must be > 0");
    }

    [[nodiscard]] Real p_base() const { return k_p / 100.0 * p_l0; }
    [[nodiscard]] Real q_base() const { return k_q / 100.0 * q_l0; }
};

struct ErlPowers {
    Real p_s, p_t, q_s, q_t;
};

[[nodiscard]] inline ErlPowers erl_powers(const ErlParams& e, Real v) {
    const Real ratio = v / e.v0.value_or(1.0);
    return {e.p_base() * std::pow(ratio, e.alpha_s), e.p_base() * std::pow(ratio, e.alpha_t),
            e.q_base() * std::pow(ratio, e.beta_s), e.q_base() * std::pow(ratio, e.beta_t)};
}

struct ErlRates {
    Real x_p, x_q;
};

[[nodiscard]] inline ErlRates erl_rates(const ErlParams& e, Real x_p, Real x_q, Real v) {
    const auto pw = erl_powers(e, v);
    return {-x_p / e.t_p + pw.p_s - pw.p_t, -x_q / e.t_q + pw.q_s - pw.q_t};
}

/// Absorbed powers p = x_p/T_p + p_t, q = x_q/T_q + q_t.
[[nodiscard]] inline PowerResiduals erl_absorption(const ErlParams& e, Real x_p, Real x_q, Real v) {
    const auto pw = erl_powers(e, v);
    return {x_p / e.t_p + pw.p_t, x_q / e.t_q + pw.q_t};
}

// =============================================================================
// Load tap changer
// =============================================================================

struct LtcParams {
    std::string id;
    std::size_t branch = 0;  // index into the branch list
    int bus = 0;             // controlled bus
    Real v0 = 1.0;
    Real d = 0.01;
    Real dm = 0.00625;
    Real m_min = 0.9;
    Real m_max = 1.1;
    Real delay_first = 20.0;
    Real delay_next = 10.0;

    void validate() const {
        require(m_min <= m_max, "ltc " + id + ": need m_min <= m_max");
        require(dm > 0.0, "ltc " + id + ": dm must be > 0");
        require(d >= 0.0, "ltc " + id + ": d must be >= 0");
        require(delay_first >= 0.0 && delay_next >= 0.0, "ltc " + id + ": delays must be >= 0");
    }
};

struct LtcDecision {
    Real m;
    bool fired;
    DiscreteTimer timer;
};

/// Tap logic: raise the ratio when the controlled voltage is above the
/// deadband, lower it when below, each move delayed (longer for the first
/// move of an excursion). Returning inside the deadband disarms the timer.
[[nodiscard]] inline LtcDecision ltc_update(const LtcParams& l, Real m, Real v, Real t, DiscreteTimer timer) {
    constexpr Real kTimeSlack = 1e-9;
    const int dir = v > l.v0 + l.d ? 1 : (v < l.v0 - l.d ? -1 : 0);
    if (dir == 0) return {m, false, DiscreteTimer{}};
    if (!timer.armed || timer.direction != dir) timer = DiscreteTimer{true, dir, t, 0};

    const Real delay = timer.count == 0 ? l.delay_first : l.delay_next;
    if (t - timer.start + kTimeSlack < delay) return {m, false, timer};

    const bool can_move = dir > 0 ? m < l.m_max : m > l.m_min;
    if (!can_move) return {m, false, timer};

    const Real next = std::clamp(m + dir * l.dm, l.m_min, l.m_max);
    timer.start = t;
    ++timer.count;
    return {next, true, timer};
}

}  // namespace qssa::net
