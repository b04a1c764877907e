#pragma once

// Operating-point initialization: a power flow fixes bus voltages, device
// states follow from the terminal conditions, unset set-points ("auto"
// parameters) are back-solved, and a full Newton polish lands on the
// long-term equilibrium. Contingencies are then applied at t = 0.

#include "qssa/algebra/manifold.hpp"
#include "qssa/netmodel/params.hpp"

#include <memory>

namespace qssa::net {

struct PowerFlowResult {
    std::vector<Real> v, theta;
    std::vector<Real> p_gen, q_gen;  // per generator
};

namespace detail {

/// Steady-state recovery-load absorption at voltage v.
[[nodiscard]] inline PowerResiduals erl_steady(const ErlParams& e, Real v) {
    const Real v0 = e.v0.value_or(v);
    return {e.p_base() * std::pow(v / v0, e.alpha_s), e.q_base() * std::pow(v / v0, e.beta_s)};
}

}  // namespace detail

/// Generators are PV buses (P = p0, |V| = bus.v); slack buses hold their
/// set-points; everything else is PQ with static and recovery loads.
[[nodiscard]] inline PowerFlowResult solve_power_flow(const SystemSpec& spec) {
    const Network net(spec.buses, spec.branches);
    const std::size_t nb = net.bus_count();
    std::vector<int> gen_at(nb, -1);
    for (std::size_t k = 0; k < spec.generators.size(); ++k) {
        const auto i = net.index_of(spec.generators[k].bus);
        require(spec.buses[i].type != BusType::Slack, "generator " + spec.generators[k].id + " sits on a slack bus");
        require(gen_at[i] < 0, "more than one generator on bus " + std::to_string(spec.buses[i].id));
        gen_at[i] = static_cast<int>(k);
    }

    std::vector<Eigen::Index> theta_col(nb, -1), v_col(nb, -1);
    Eigen::Index n = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        if (spec.buses[i].type == BusType::Slack) continue;
        theta_col[i] = n++;
        if (gen_at[i] < 0) v_col[i] = n++;
    }

    std::vector<Real> v(nb), th(nb), p_net(nb), q_net(nb);
    auto unpack = [&](const Vector& u) {
        for (std::size_t i = 0; i < nb; ++i) {
            v[i] = v_col[i] >= 0 ? u[v_col[i]] : spec.buses[i].v;
            th[i] = theta_col[i] >= 0 ? u[theta_col[i]] : spec.buses[i].theta;
        }
    };
    auto loads = [&](std::size_t i) {
        const auto& b = spec.buses[i];
        PowerResiduals l{b.p_load * std::pow(v[i], b.alpha_p), b.q_load * std::pow(v[i], b.alpha_q)};
        for (const auto& e : spec.erls) {
            if (net.index_of(e.bus) != i) continue;
            const auto s = detail::erl_steady(e, v[i]);
            l.p += s.p;
            l.q += s.q;
        }
        return l;
    };
    const auto taps = net.nominal_taps();
    auto residual = [&](const Vector& u) {
        unpack(u);
        net.injections(v, th, taps, p_net, q_net);
        Vector r(n);
        for (std::size_t i = 0; i < nb; ++i) {
            if (theta_col[i] < 0) continue;
            const auto l = loads(i);
            const Real p_gen = gen_at[i] >= 0 ? spec.generators[static_cast<std::size_t>(gen_at[i])].p0 : 0.0;
            r[theta_col[i]] = p_gen - l.p - p_net[i];
            if (v_col[i] >= 0) r[v_col[i]] = -l.q - q_net[i];
        }
        return r;
    };

    Vector u0(n);
    for (std::size_t i = 0; i < nb; ++i) {
        if (theta_col[i] >= 0) u0[theta_col[i]] = spec.buses[i].theta;
        if (v_col[i] >= 0) u0[v_col[i]] = spec.buses[i].v;
    }
    const auto sol = algebra::newton_solve(residual, u0).solution;
    unpack(sol);
    net.injections(v, th, taps, p_net, q_net);

    PowerFlowResult out;
    out.v = v;
    out.theta = th;
    for (const auto& g : spec.generators) {
        const auto i = net.index_of(g.bus);
        const auto l = loads(i);
        out.p_gen.push_back(p_net[i] + l.p);
        out.q_gen.push_back(q_net[i] + l.q);
    }
    return out;
}

struct InitializedSystem {
    SystemSpec spec;  // every "auto" parameter resolved
    PartitionedState state;
    PowerFlowResult power_flow;
};

/// Resolves unset set-points from a power flow and returns the long-term
/// equilibrium (all of h_c, f, g zero; limiter outputs pinned at zero).
[[nodiscard]] inline InitializedSystem initialize_system(SystemSpec spec) {
    const Network net(spec.buses, spec.branches);
    const auto pf = solve_power_flow(spec);
    auto gen_of = [&](const std::string& id) {
        for (std::size_t k = 0; k < spec.generators.size(); ++k) {
            if (spec.generators[k].id == id) return k;
        }
        throw LayoutError("unknown generator '" + id + "'");
    };

    struct GenInit {
        GeneratorStates st;
        Real p, q, p_m, v_f_star;
    };
    std::vector<GenInit> gens;
    for (std::size_t k = 0; k < spec.generators.size(); ++k) {
        const auto& g = spec.generators[k];
        const auto i = net.index_of(g.bus);
        const Complex vt = std::polar(pf.v[i], pf.theta[i]);
        const Complex current = std::conj(Complex(pf.p_gen[k], pf.q_gen[k]) / vt);
        const Complex e = vt + Complex(g.r_a, g.x_q) * current;
        GenInit gi{};
        gi.st.delta = std::arg(e);
        gi.st.omega = 1.0;
        const Complex dq = current * Complex(0.0, 1.0) * std::polar(1.0, -gi.st.delta);
        const Real i_d = dq.real();
        const Real i_q = dq.imag();
        const Real v_d = pf.v[i] * std::sin(gi.st.delta - pf.theta[i]);
        const Real v_q = pf.v[i] * std::cos(gi.st.delta - pf.theta[i]);
        gi.st.e_d = (g.x_q - g.x_q_prime) * i_q;
        gi.st.e_q = v_q + g.r_a * i_q + g.x_d_prime * i_d;
        gi.p = pf.p_gen[k];
        gi.q = pf.q_gen[k];
        gi.p_m = (v_q + g.r_a * i_q) * i_q + (v_d + g.r_a * i_d) * i_d;
        gi.v_f_star = generator_saturation(g, gi.st.e_q) + (g.x_d - g.x_d_prime) * i_d;
        gens.push_back(gi);
    }

    // Resolve auto set-points.
    for (std::size_t k = 0; k < spec.generators.size(); ++k) {
        auto& g = spec.generators[k];
        if (!find_by_generator(spec.governors, g.id) && !g.p_m0) g.p_m0 = gens[k].p_m;
        if (!find_by_generator(spec.avrs, g.id) && !g.v_f0) g.v_f0 = gens[k].v_f_star;
    }
    for (auto& a : spec.avrs) {
        const auto k = gen_of(a.generator);
        const Real v_f = gens[k].v_f_star;
        const Real v_r = v_f * (a.k_e + avr_ceiling(a, v_f));
        require(v_r > a.v_r_min && v_r < a.v_r_max,
                "avr " + a.id + ": regulator output " + format_real(v_r) + " outside its limits at the operating point");
        const Real v_m = pf.v[net.index_of(spec.generators[k].bus)];
        if (!a.v_ref0) a.v_ref0 = v_m + v_r / a.k_a;
    }
    for (auto& t : spec.governors) {
        const auto k = gen_of(t.generator);
        require(gens[k].p_m >= t.p_min && gens[k].p_m <= t.p_max,
                "tg " + t.id + ": mechanical power outside [p_min, p_max] at the operating point");
        if (!t.p_order) t.p_order = gens[k].p_m - (t.omega_ref0 - 1.0) / t.r;
    }
    for (auto& e : spec.erls) {
        if (!e.v0) e.v0 = pf.v[net.index_of(e.bus)];
    }

    const SystemModel model(spec);
    const auto& lay = model.layout();
    PartitionedState s = PartitionedState::zeros(lay);
    for (std::size_t i = 0; i < spec.buses.size(); ++i) {
        const std::string name = "bus" + std::to_string(spec.buses[i].id);
        s[lay.at(name + ".v")] = pf.v[i];
        s[lay.at(name + ".theta")] = pf.theta[i];
    }
    for (std::size_t k = 0; k < spec.generators.size(); ++k) {
        const auto& g = spec.generators[k];
        const auto& gi = gens[k];
        s[lay.at(g.id + ".delta")] = gi.st.delta;
        s[lay.at(g.id + ".omega")] = gi.st.omega;
        s[lay.at(g.id + ".e_q_prime")] = gi.st.e_q;
        s[lay.at(g.id + ".e_d_prime")] = gi.st.e_d;
        s[lay.at(g.id + ".p")] = gi.p;
        s[lay.at(g.id + ".q")] = gi.q;
        s[lay.at(g.id + ".p_m")] = gi.p_m;
        s[lay.at(g.id + ".v_f")] = gi.v_f_star;
    }
    for (const auto& a : spec.avrs) {
        const auto k = gen_of(a.generator);
        const Real v_f = gens[k].v_f_star;
        s[lay.at(a.id + ".v_m")] = pf.v[net.index_of(spec.generators[k].bus)];
        s[lay.at(a.id + ".v_r1")] = v_f * (a.k_e + avr_ceiling(a, v_f));
        s[lay.at(a.id + ".v_r2")] = -a.k_f / a.t_f * v_f;
        s[lay.at(a.id + ".v_f")] = v_f;
        s[lay.at(a.id + ".v_ref")] = *a.v_ref0;
    }
    for (const auto& t : spec.governors) {
        const auto k = gen_of(t.generator);
        const auto tg = tg_equilibrium(t, gens[k].p_m);
        s[lay.at(t.id + ".x_g1")] = tg.x_g1;
        s[lay.at(t.id + ".x_g2")] = tg.x_g2;
        s[lay.at(t.id + ".x_g3")] = tg.x_g3;
        s[lay.at(t.id + ".omega_ref")] = t.omega_ref0;
    }
    for (const auto& o : spec.oxls) {
        const auto k = gen_of(o.generator);
        const Real v = pf.v[net.index_of(spec.generators[k].bus)];
        s[lay.at(o.id + ".i_f")] = oxl_field_current(o, v, gens[k].p, gens[k].q);
    }
    for (const auto& e : spec.erls) {
        const Real v = pf.v[net.index_of(e.bus)];
        const auto steady = detail::erl_steady(e, v);
        const auto pw = erl_powers(e, v);
        s[lay.at(e.id + ".x_p")] = e.t_p * (pw.p_s - pw.p_t);
        s[lay.at(e.id + ".x_q")] = e.t_q * (pw.q_s - pw.q_t);
        s[lay.at(e.id + ".p")] = steady.p;
        s[lay.at(e.id + ".q")] = steady.q;
    }
    for (const auto& l : spec.ltcs) s[lay.at(l.id + ".m")] = spec.branches[l.branch].tap;

    algebra::NewtonOptions opt;
    opt.tol = 1e-11;
    s = algebra::solve_longterm_equilibrium(model, s, opt);
    return {std::move(spec), std::move(s), pf};
}

// =============================================================================
// Contingencies
// =============================================================================

enum class ContingencyKind { BranchOutage, LoadStep, ParameterSet };

[[nodiscard]] inline std::string_view to_string(ContingencyKind k) {
    switch (k) {
        case ContingencyKind::BranchOutage: return "branch-outage";
        case ContingencyKind::LoadStep: return "load-step";
        case ContingencyKind::ParameterSet: return "parameter-set";
    }
    return "?";
}

struct Contingency {
    Real time = 0.0;
    ContingencyKind kind = ContingencyKind::BranchOutage;
    std::size_t branch = 0;  // branch-outage
    int bus = 0;             // load-step
    Real dp = 0.0;
    Real dq = 0.0;
    std::string device;      // parameter-set
    std::string parameter;
    Real value = 0.0;
};

/// The post-contingency system description. Only changes at t = 0 are supported.
[[nodiscard]] inline SystemSpec apply_contingencies(SystemSpec spec, const std::vector<Contingency>& list) {
    for (const auto& c : list) {
        require(c.time == 0.0, "contingencies are applied at t = 0 only");
        switch (c.kind) {
            case ContingencyKind::BranchOutage:
                require(c.branch < spec.branches.size(), "branch-outage: branch index out of range");
                spec.branches[c.branch].in_service = false;
                break;
            case ContingencyKind::LoadStep: {
                const Network net(spec.buses, spec.branches);
                auto& b = spec.buses[net.index_of(c.bus)];
                b.p_load += c.dp;
                b.q_load += c.dq;
                break;
            }
            case ContingencyKind::ParameterSet: set_parameter(spec, c.device, c.parameter, c.value); break;
        }
    }
    return spec;
}

/// A ready-to-simulate case: the post-contingency model and the state at
/// t = 0 (pre-contingency equilibrium with y re-solved on the new network).
struct PreparedCase {
    std::shared_ptr<const SystemModel> pre_model;
    std::shared_ptr<const SystemModel> model;
    PartitionedState equilibrium;
    PartitionedState initial;
};

[[nodiscard]] inline PreparedCase prepare_case(SystemSpec spec, const std::vector<Contingency>& contingencies) {
    auto init = initialize_system(std::move(spec));
    PreparedCase out;
    out.pre_model = std::make_shared<const SystemModel>(init.spec);
    out.model = std::make_shared<const SystemModel>(apply_contingencies(init.spec, contingencies));
    out.equilibrium = init.state;
    out.initial = init.state;
    if (!contingencies.empty()) {
        algebra::NewtonOptions opt;
        opt.tol = 1e-10;
        out.initial.y = algebra::solve_algebraic(*out.model, out.initial, out.initial.y, opt);
    }
    return out;
}

}  // namespace qssa::net
