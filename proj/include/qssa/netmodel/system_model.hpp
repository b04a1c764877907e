#pragma once

#include "qssa/model.hpp"
#include "qssa/netmodel/devices.hpp"
#include "qssa/netmodel/network.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace qssa::net {

/// Plain description of a power system: network plus device blocks.
struct SystemSpec {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<GeneratorParams> generators;
    std::vector<AvrParams> avrs;
    std::vector<TurbineGovernorParams> governors;
    std::vector<OxlParams> oxls;
    std::vector<ErlParams> erls;
    std::vector<LtcParams> ltcs;
};

template <class Params>
[[nodiscard]] std::optional<std::size_t> find_by_generator(const std::vector<Params>& list, const std::string& gen) {
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].generator == gen) return i;
    }
    return std::nullopt;
}

/// The long-term stability model of a power system. Variable assignment:
///   z_c: governor x_g1..3, limiter v_oxl, recovery-load x_p, x_q
///   z_d: tap ratios m
///   x:   generator delta, omega, e'_q, e'_d; regulator v_m, v_r1, v_r2, v_f
///   y:   generator p, q, p_m, v_f; regulator v_ref; governor omega_ref;
///        limiter i_f; recovery-load p, q; bus v, theta
/// Each algebraic variable owns the row of g that defines it.
class SystemModel final : public HybridModel {
public:
    explicit SystemModel(SystemSpec spec) : spec_(std::move(spec)), network_(spec_.buses, spec_.branches) {
        validate();
        build_layout();
    }

    [[nodiscard]] const Layout& layout() const override { return layout_; }
    [[nodiscard]] const SystemSpec& spec() const { return spec_; }
    [[nodiscard]] const Network& network() const { return network_; }

    [[nodiscard]] std::size_t bus_v_index(std::size_t bus) const { return bus_idx_[bus].v; }
    [[nodiscard]] std::size_t bus_theta_index(std::size_t bus) const { return bus_idx_[bus].theta; }

    /// Effective branch ratios at the given tap state.
    [[nodiscard]] std::vector<Real> effective_taps(const Vector& zd) const {
        auto taps = network_.nominal_taps();
        for (std::size_t k = 0; k < spec_.ltcs.size(); ++k) {
            taps[spec_.ltcs[k].branch] = zd[static_cast<Eigen::Index>(ltc_idx_[k].m)];
        }
        return taps;
    }

    [[nodiscard]] Residuals eval_all(const PartitionedState& s, Real t) const override {
        check_layout(layout_, s);
        Residuals r;
        r.hc = Vector::Zero(s.zc.size());
        r.f = Vector::Zero(s.x.size());
        r.g = Vector::Zero(s.y.size());

        const std::size_t nb = network_.bus_count();
        std::vector<Real> v(nb), th(nb), p_net(nb), q_net(nb);
        for (std::size_t i = 0; i < nb; ++i) {
            v[i] = s.y[ix(bus_idx_[i].v)];
            th[i] = s.y[ix(bus_idx_[i].theta)];
        }
        const auto taps = effective_taps(s.zd);
        network_.injections(v, th, taps, p_net, q_net);

        // Net device injection at each bus (generation minus consumption).
        std::vector<Real> p_dev(nb, 0.0), q_dev(nb, 0.0);
        for (std::size_t i = 0; i < nb; ++i) {
            const auto& b = spec_.buses[i];
            p_dev[i] -= b.p_load * std::pow(v[i], b.alpha_p);
            q_dev[i] -= b.q_load * std::pow(v[i], b.alpha_q);
        }

        for (std::size_t k = 0; k < spec_.generators.size(); ++k) {
            const auto& gp = spec_.generators[k];
            const auto& gi = gen_idx_[k];
            const GeneratorStates gs = gen_states(s, k);
            const Real p = s.y[ix(gi.p)];
            const Real q = s.y[ix(gi.q)];
            const Real p_m = s.y[ix(gi.p_m)];
            const Real v_f = s.y[ix(gi.v_f)];
            const auto st = generator_stator(gp, gs, v[gi.bus], th[gi.bus]);
            const auto rates = generator_rates(gp, gs, st, p_m, v_f, p);
            r.f[ix(gi.delta)] = rates.delta;
            r.f[ix(gi.omega)] = rates.omega;
            r.f[ix(gi.e_q)] = rates.e_q;
            r.f[ix(gi.e_d)] = rates.e_d;

            const auto pr = generator_power_residuals(st, p, q);
            r.g[ix(gi.p)] = pr.p;
            r.g[ix(gi.q)] = pr.q;
            const Real p_m_src = gi.tg ? tg_mechanical_power(spec_.governors[*gi.tg], tg_states(s, *gi.tg))
                                       : *gp.p_m0;
            r.g[ix(gi.p_m)] = p_m_src - p_m;
            const Real v_f_src = gi.avr ? s.x[ix(avr_idx_[*gi.avr].v_f)] : *gp.v_f0;
            r.g[ix(gi.v_f)] = v_f_src - v_f;

            p_dev[gi.bus] += p;
            q_dev[gi.bus] += q;
        }

        for (std::size_t k = 0; k < spec_.avrs.size(); ++k) {
            const auto& ap = spec_.avrs[k];
            const auto& ai = avr_idx_[k];
            const auto& gi = gen_idx_[ai.gen];
            const Real v_ref = s.y[ix(ai.v_ref)];
            const auto rates = avr_rates(ap, avr_states(s, k), v[gi.bus], v_ref);
            r.f[ix(ai.v_m)] = rates.v_m;
            r.f[ix(ai.v_r1)] = rates.v_r1;
            r.f[ix(ai.v_r2)] = rates.v_r2;
            r.f[ix(ai.v_f)] = rates.v_f;
            const Real v_oxl = ai.oxl ? s.zc[ix(oxl_idx_[*ai.oxl].v_oxl)] : 0.0;
            r.g[ix(ai.v_ref)] = *ap.v_ref0 - v_ref - v_oxl;
        }

        for (std::size_t k = 0; k < spec_.governors.size(); ++k) {
            const auto& tp = spec_.governors[k];
            const auto& ti = tg_idx_[k];
            const Real omega = s.x[ix(gen_idx_[ti.gen].omega)];
            const Real omega_ref = s.y[ix(ti.omega_ref)];
            const auto rates = tg_rates(tp, tg_states(s, k), omega, omega_ref);
            r.hc[ix(ti.x_g1)] = rates.x_g1;
            r.hc[ix(ti.x_g2)] = rates.x_g2;
            r.hc[ix(ti.x_g3)] = rates.x_g3;
            r.g[ix(ti.omega_ref)] = tp.omega_ref0 - omega_ref;
        }

        for (std::size_t k = 0; k < spec_.oxls.size(); ++k) {
            const auto& op = spec_.oxls[k];
            const auto& oi = oxl_idx_[k];
            const auto& gi = gen_idx_[oi.gen];
            const Real i_f = s.y[ix(oi.i_f)];
            r.g[ix(oi.i_f)] = oxl_field_current(op, v[gi.bus], s.y[ix(gi.p)], s.y[ix(gi.q)]) - i_f;
            r.hc[ix(oi.v_oxl)] = oxl_rate(op, s.zc[ix(oi.v_oxl)], i_f, t);
        }

        for (std::size_t k = 0; k < spec_.erls.size(); ++k) {
            const auto& ep = spec_.erls[k];
            const auto& ei = erl_idx_[k];
            const Real x_p = s.zc[ix(ei.x_p)];
            const Real x_q = s.zc[ix(ei.x_q)];
            const auto rates = erl_rates(ep, x_p, x_q, v[ei.bus]);
            r.hc[ix(ei.x_p)] = rates.x_p;
            r.hc[ix(ei.x_q)] = rates.x_q;
            const auto absorbed = erl_absorption(ep, x_p, x_q, v[ei.bus]);
            const Real p = s.y[ix(ei.p)];
            const Real q = s.y[ix(ei.q)];
            r.g[ix(ei.p)] = absorbed.p - p;
            r.g[ix(ei.q)] = absorbed.q - q;
            p_dev[ei.bus] -= p;
            q_dev[ei.bus] -= q;
        }

        for (std::size_t i = 0; i < nb; ++i) {
            const auto& b = spec_.buses[i];
            if (b.type == BusType::Slack) {
                r.g[ix(bus_idx_[i].v)] = v[i] - b.v;
                r.g[ix(bus_idx_[i].theta)] = th[i] - b.theta;
            } else {
                r.g[ix(bus_idx_[i].v)] = q_dev[i] - q_net[i];
                r.g[ix(bus_idx_[i].theta)] = p_dev[i] - p_net[i];
            }
        }
        return r;
    }

    [[nodiscard]] Vector eval_slow_init(const PartitionedState& s) const override {
        Vector hc = eval_all(s, 0.0).hc;
        for (const auto& oi : oxl_idx_) hc[ix(oi.v_oxl)] = s.zc[ix(oi.v_oxl)];
        return hc;
    }

    [[nodiscard]] DiscreteUpdate eval_discrete_update(const PartitionedState& s, Real t,
                                                      const DiscreteTimers& timers) const override {
        check_layout(layout_, s);
        DiscreteUpdate out{s.zd, {}, timers};
        if (out.timers.size() != static_cast<std::size_t>(s.zd.size())) {
            throw LayoutError("timer count does not match z_d");
        }
        struct Due {
            Real due;
            int bus;
            DiscreteEvent ev;
        };
        std::vector<Due> fired;
        for (std::size_t k = 0; k < spec_.ltcs.size(); ++k) {
            const auto& lp = spec_.ltcs[k];
            const auto& li = ltc_idx_[k];
            const Real m = s.zd[ix(li.m)];
            const Real v = s.y[ix(bus_idx_[li.bus].v)];
            const auto prev = out.timers[li.m];
            const auto dec = ltc_update(lp, m, v, t, prev);
            out.timers[li.m] = dec.timer;
            if (dec.fired) {
                out.zd[ix(li.m)] = dec.m;
                const Real due = prev.start + (prev.count == 0 ? lp.delay_first : lp.delay_next);
                fired.push_back({due, lp.bus, DiscreteEvent{t, lp.id, li.m, m, dec.m}});
            }
        }
        std::stable_sort(fired.begin(), fired.end(), [](const Due& a, const Due& b) {
            return a.due != b.due ? a.due < b.due : a.bus < b.bus;
        });
        for (auto& f : fired) out.events.push_back(std::move(f.ev));
        return out;
    }

    [[nodiscard]] bool activity_pending(const PartitionedState& s, Real t) const override {
        for (std::size_t k = 0; k < spec_.ltcs.size(); ++k) {
            const auto& lp = spec_.ltcs[k];
            const Real m = s.zd[ix(ltc_idx_[k].m)];
            const Real v = s.y[ix(bus_idx_[ltc_idx_[k].bus].v)];
            if (v > lp.v0 + lp.d && m < lp.m_max) return true;
            if (v < lp.v0 - lp.d && m > lp.m_min) return true;
        }
        for (std::size_t k = 0; k < spec_.oxls.size(); ++k) {
            const auto& op = spec_.oxls[k];
            if (t < op.t_delay && s.y[ix(oxl_idx_[k].i_f)] > op.i_f_lim) return true;
        }
        return false;
    }

    [[nodiscard]] std::size_t oscillation_probe() const override {
        return gen_idx_.empty() ? 0 : gen_idx_.front().omega;
    }

    [[nodiscard]] Real largest_fast_time_constant() const override {
        Real t = 0.0;
        for (const auto& g : spec_.generators) t = std::max({t, g.t_d0_prime, g.t_q0_prime});
        for (const auto& a : spec_.avrs) t = std::max({t, a.t_a, a.t_e, a.t_f, a.t_r});
        return t > 0.0 ? t : 1.0;
    }

    [[nodiscard]] GeneratorStates gen_states(const PartitionedState& s, std::size_t k) const {
        const auto& gi = gen_idx_[k];
        return {s.x[ix(gi.delta)], s.x[ix(gi.omega)], s.x[ix(gi.e_q)], s.x[ix(gi.e_d)]};
    }
    [[nodiscard]] AvrStates avr_states(const PartitionedState& s, std::size_t k) const {
        const auto& ai = avr_idx_[k];
        return {s.x[ix(ai.v_m)], s.x[ix(ai.v_r1)], s.x[ix(ai.v_r2)], s.x[ix(ai.v_f)]};
    }
    [[nodiscard]] TgStates tg_states(const PartitionedState& s, std::size_t k) const {
        const auto& ti = tg_idx_[k];
        return {s.zc[ix(ti.x_g1)], s.zc[ix(ti.x_g2)], s.zc[ix(ti.x_g3)]};
    }

private:
    struct GenIdx {
        std::size_t bus, delta, omega, e_q, e_d, p, q, p_m, v_f;
        std::optional<std::size_t> avr, tg, oxl;
    };
    struct AvrIdx {
        std::size_t gen, v_m, v_r1, v_r2, v_f, v_ref;
        std::optional<std::size_t> oxl;
    };
    struct TgIdx {
        std::size_t gen, x_g1, x_g2, x_g3, omega_ref;
    };
    struct OxlIdx {
        std::size_t gen, v_oxl, i_f;
    };
    struct ErlIdx {
        std::size_t bus, x_p, x_q, p, q;
    };
    struct LtcIdx {
        std::size_t bus, m;
    };
    struct BusIdx {
        std::size_t v, theta;
    };

    static Eigen::Index ix(std::size_t i) { return static_cast<Eigen::Index>(i); }

    [[nodiscard]] std::size_t gen_index(const std::string& id, const std::string& who) const {
        for (std::size_t k = 0; k < spec_.generators.size(); ++k) {
            if (spec_.generators[k].id == id) return k;
        }
        throw LayoutError(who + " references unknown generator '" + id + "'");
    }

    void validate() const {
        std::size_t slack = 0;
        for (const auto& b : spec_.buses) slack += b.type == BusType::Slack ? 1 : 0;
        require(slack >= 1, "system needs at least one slack (infinite) bus");
        for (const auto& g : spec_.generators) {
            g.validate();
            (void)network_.index_of(g.bus);
        }
        auto unique_per_gen = [&](const auto& list, const std::string& kind) {
            for (std::size_t i = 0; i < list.size(); ++i) {
                list[i].validate();
                (void)gen_index(list[i].generator, kind + " " + list[i].id);
                for (std::size_t j = 0; j < i; ++j) {
                    require(list[i].generator != list[j].generator,
                            "generator '" + list[i].generator + "' has more than one " + kind);
                }
            }
        };
        unique_per_gen(spec_.avrs, "avr");
        unique_per_gen(spec_.governors, "tg");
        unique_per_gen(spec_.oxls, "oxl");
        for (const auto& o : spec_.oxls) {
            require(find_by_generator(spec_.avrs, o.generator).has_value(),
                    "oxl " + o.id + " needs an avr on generator '" + o.generator + "'");
        }
        for (const auto& e : spec_.erls) {
            e.validate();
            (void)network_.index_of(e.bus);
            require(e.v0.has_value(), "erl " + e.id + ": v0 unresolved (initialize the system first)");
        }
        for (std::size_t i = 0; i < spec_.ltcs.size(); ++i) {
            const auto& l = spec_.ltcs[i];
            l.validate();
            require(l.branch < spec_.branches.size(), "ltc " + l.id + ": branch index out of range");
            (void)network_.index_of(l.bus);
            for (std::size_t j = 0; j < i; ++j) {
                require(spec_.ltcs[j].branch != l.branch, "branch controlled by more than one ltc");
            }
        }
        for (const auto& g : spec_.generators) {
            if (!find_by_generator(spec_.governors, g.id)) {
                require(g.p_m0.has_value(), "generator " + g.id + ": p_m0 unresolved");
            }
            if (!find_by_generator(spec_.avrs, g.id)) {
                require(g.v_f0.has_value(), "generator " + g.id + ": v_f0 unresolved");
            }
        }
        for (const auto& a : spec_.avrs) require(a.v_ref0.has_value(), "avr " + a.id + ": v_ref0 unresolved");
        for (const auto& t : spec_.governors) require(t.p_order.has_value(), "tg " + t.id + ": p_order unresolved");
    }

    void build_layout() {
        constexpr auto Zc = Partition::SlowContinuous;
        constexpr auto Zd = Partition::Discrete;
        constexpr auto X = Partition::Fast;
        constexpr auto Y = Partition::Algebraic;

        for (const auto& tg : spec_.governors) {
            TgIdx ti{};
            ti.gen = gen_index(tg.generator, "tg");
            ti.x_g1 = layout_.add(Zc, tg.id + ".x_g1");
            ti.x_g2 = layout_.add(Zc, tg.id + ".x_g2");
            ti.x_g3 = layout_.add(Zc, tg.id + ".x_g3");
            tg_idx_.push_back(ti);
        }
        for (const auto& o : spec_.oxls) {
            OxlIdx oi{};
            oi.gen = gen_index(o.generator, "oxl");
            oi.v_oxl = layout_.add(Zc, o.id + ".v_oxl");
            oxl_idx_.push_back(oi);
        }
        for (const auto& e : spec_.erls) {
            ErlIdx ei{};
            ei.bus = network_.index_of(e.bus);
            ei.x_p = layout_.add(Zc, e.id + ".x_p");
            ei.x_q = layout_.add(Zc, e.id + ".x_q");
            erl_idx_.push_back(ei);
        }
        for (const auto& l : spec_.ltcs) {
            LtcIdx li{};
            li.bus = network_.index_of(l.bus);
            li.m = layout_.add(Zd, l.id + ".m");
            ltc_idx_.push_back(li);
        }
        for (const auto& g : spec_.generators) {
            GenIdx gi{};
            gi.bus = network_.index_of(g.bus);
            gi.delta = layout_.add(X, g.id + ".delta", true);
            gi.omega = layout_.add(X, g.id + ".omega");
            gi.e_q = layout_.add(X, g.id + ".e_q_prime");
            gi.e_d = layout_.add(X, g.id + ".e_d_prime");
            gen_idx_.push_back(gi);
        }
        for (const auto& a : spec_.avrs) {
            AvrIdx ai{};
            ai.gen = gen_index(a.generator, "avr");
            ai.v_m = layout_.add(X, a.id + ".v_m");
            ai.v_r1 = layout_.add(X, a.id + ".v_r1");
            ai.v_r2 = layout_.add(X, a.id + ".v_r2");
            ai.v_f = layout_.add(X, a.id + ".v_f");
            avr_idx_.push_back(ai);
        }
        for (auto& gi : gen_idx_) {
            const auto k = static_cast<std::size_t>(&gi - gen_idx_.data());
            const auto& g = spec_.generators[k];
            gi.p = layout_.add(Y, g.id + ".p");
            gi.q = layout_.add(Y, g.id + ".q");
            gi.p_m = layout_.add(Y, g.id + ".p_m");
            gi.v_f = layout_.add(Y, g.id + ".v_f");
            gi.avr = find_by_generator(spec_.avrs, g.id);
            gi.tg = find_by_generator(spec_.governors, g.id);
            gi.oxl = find_by_generator(spec_.oxls, g.id);
        }
        for (std::size_t k = 0; k < spec_.avrs.size(); ++k) {
            avr_idx_[k].v_ref = layout_.add(Y, spec_.avrs[k].id + ".v_ref");
            avr_idx_[k].oxl = gen_idx_[avr_idx_[k].gen].oxl;
        }
        for (std::size_t k = 0; k < spec_.governors.size(); ++k) {
            tg_idx_[k].omega_ref = layout_.add(Y, spec_.governors[k].id + ".omega_ref");
        }
        for (std::size_t k = 0; k < spec_.oxls.size(); ++k) {
            oxl_idx_[k].i_f = layout_.add(Y, spec_.oxls[k].id + ".i_f");
        }
        for (std::size_t k = 0; k < spec_.erls.size(); ++k) {
            erl_idx_[k].p = layout_.add(Y, spec_.erls[k].id + ".p");
            erl_idx_[k].q = layout_.add(Y, spec_.erls[k].id + ".q");
        }
        for (const auto& b : spec_.buses) {
            BusIdx bi{};
            const std::string name = "bus" + std::to_string(b.id);
            bi.v = layout_.add(Y, name + ".v");
            bi.theta = layout_.add(Y, name + ".theta", true);
            bus_idx_.push_back(bi);
        }
    }

    SystemSpec spec_;
    Network network_;
    Layout layout_;
    std::vector<GenIdx> gen_idx_;
    std::vector<AvrIdx> avr_idx_;
    std::vector<TgIdx> tg_idx_;
    std::vector<OxlIdx> oxl_idx_;
    std::vector<ErlIdx> erl_idx_;
    std::vector<LtcIdx> ltc_idx_;
    std::vector<BusIdx> bus_idx_;
};

}  // namespace qssa::net
