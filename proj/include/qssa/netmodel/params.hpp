#pragma once

// Name tables for every numeric device parameter. The scenario loader and
// the parameter-set contingency both address parameters through them.

#include "qssa/netmodel/system_model.hpp"

#include <array>
#include <string_view>

namespace qssa::net {

template <class P>
struct RealField {
    std::string_view name;
    Real P::*ptr;
};

template <class P>
struct OptionalField {
    std::string_view name;
    std::optional<Real> P::*ptr;
};

template <class P>
struct ParamTable;

template <>
struct ParamTable<Bus> {
    static constexpr std::array<RealField<Bus>, 6> reals{{
        {"v", &Bus::v},
        {"theta", &Bus::theta},
        {"p_load", &Bus::p_load},
        {"q_load", &Bus::q_load},
        {"alpha_p", &Bus::alpha_p},
        {"alpha_q", &Bus::alpha_q},
    }};
    static constexpr std::array<OptionalField<Bus>, 0> optionals{};
};

template <>
struct ParamTable<Branch> {
    static constexpr std::array<RealField<Branch>, 4> reals{{
        {"r", &Branch::r},
        {"x", &Branch::x},
        {"b", &Branch::b},
        {"tap", &Branch::tap},
    }};
    static constexpr std::array<OptionalField<Branch>, 0> optionals{};
};

template <>
struct ParamTable<GeneratorParams> {
    using P = GeneratorParams;
    static constexpr std::array<RealField<P>, 15> reals{{
        {"omega_b", &P::omega_b},
        {"m", &P::m},
        {"d", &P::d},
        {"x_d", &P::x_d},
        {"x_d_prime", &P::x_d_prime},
        {"x_q", &P::x_q},
        {"x_q_prime", &P::x_q_prime},
        {"r_a", &P::r_a},
        {"t_d0_prime", &P::t_d0_prime},
        {"t_q0_prime", &P::t_q0_prime},
        {"k_omega", &P::k_omega},
        {"k_p", &P::k_p},
        {"p0", &P::p0},
        {"sat_a", &P::sat_a},
        {"sat_b", &P::sat_b},
    }};
    static constexpr std::array<OptionalField<P>, 2> optionals{{
        {"p_m0", &P::p_m0},
        {"v_f0", &P::v_f0},
    }};
};

template <>
struct ParamTable<AvrParams> {
    using P = AvrParams;
    static constexpr std::array<RealField<P>, 11> reals{{
        {"k_a", &P::k_a},
        {"t_a", &P::t_a},
        {"k_f", &P::k_f},
        {"t_f", &P::t_f},
        {"k_e", &P::k_e},
        {"t_e", &P::t_e},
        {"t_r", &P::t_r},
        {"a_e", &P::a_e},
        {"b_e", &P::b_e},
        {"v_r_max", &P::v_r_max},
        {"v_r_min", &P::v_r_min},
    }};
    static constexpr std::array<OptionalField<P>, 1> optionals{{{"v_ref0", &P::v_ref0}}};
};

template <>
struct ParamTable<TurbineGovernorParams> {
    using P = TurbineGovernorParams;
    static constexpr std::array<RealField<P>, 9> reals{{
        {"r", &P::r},
        {"p_max", &P::p_max},
        {"p_min", &P::p_min},
        {"t_s", &P::t_s},
        {"t_c", &P::t_c},
        {"t_3", &P::t_3},
        {"t_4", &P::t_4},
        {"t_5", &P::t_5},
        {"omega_ref0", &P::omega_ref0},
    }};
    static constexpr std::array<OptionalField<P>, 1> optionals{{{"p_order", &P::p_order}}};
};

template <>
struct ParamTable<OxlParams> {
    using P = OxlParams;
    static constexpr std::array<RealField<P>, 6> reals{{
        {"t_0", &P::t_0},
        {"i_f_lim", &P::i_f_lim},
        {"t_delay", &P::t_delay},
        {"x_d", &P::x_d},
        {"x_q", &P::x_q},
        {"v_oxl_max", &P::v_oxl_max},
    }};
    static constexpr std::array<OptionalField<P>, 0> optionals{};
};

template <>
struct ParamTable<ErlParams> {
    using P = ErlParams;
    static constexpr std::array<RealField<P>, 10> reals{{
        {"k_p", &P::k_p},
        {"k_q", &P::k_q},
        {"t_p", &P::t_p},
        {"t_q", &P::t_q},
        {"alpha_s", &P::alpha_s},
        {"alpha_t", &P::alpha_t},
        {"beta_s", &P::beta_s},
        {"beta_t", &P::beta_t},
        {"p_l0", &P::p_l0},
        {"q_l0", &P::q_l0},
    }};
    static constexpr std::array<OptionalField<P>, 1> optionals{{{"v0", &P::v0}}};
};

template <>
struct ParamTable<LtcParams> {
    using P = LtcParams;
    static constexpr std::array<RealField<P>, 7> reals{{
        {"v0", &P::v0},
        {"d", &P::d},
        {"dm", &P::dm},
        {"m_min", &P::m_min},
        {"m_max", &P::m_max},
        {"delay_first", &P::delay_first},
        {"delay_next", &P::delay_next},
    }};
    static constexpr std::array<OptionalField<P>, 0> optionals{};
};

/// Sets a named numeric parameter on one record; false if the name is unknown.
template <class P>
bool set_field(P& rec, std::string_view name, Real value) {
    for (const auto& f : ParamTable<P>::reals) {
        if (f.name == name) {
            rec.*(f.ptr) = value;
            return true;
        }
    }
    for (const auto& f : ParamTable<P>::optionals) {
        if (f.name == name) {
            rec.*(f.ptr) = value;
            return true;
        }
    }
    return false;
}

/// Sets parameter `name` on the device with identifier `device`. Buses are
/// addressed as "bus<id>". Throws LayoutError for unknown devices or names.
inline void set_parameter(SystemSpec& spec, std::string_view device, std::string_view name, Real value) {
    auto apply = [&](auto& list) -> bool {
        for (auto& rec : list) {
            if (rec.id == device) {
                if (!set_field(rec, name, value)) {
                    throw LayoutError("device '" + std::string(device) + "' has no parameter '" + std::string(name) + "'");
                }
                return true;
            }
        }
        return false;
    };
    for (auto& b : spec.buses) {
        if ("bus" + std::to_string(b.id) == device) {
            if (!set_field(b, name, value)) {
                throw LayoutError("bus has no parameter '" + std::string(name) + "'");
            }
            return;
        }
    }
    if (apply(spec.generators) || apply(spec.avrs) || apply(spec.governors) || apply(spec.oxls) ||
        apply(spec.erls) || apply(spec.ltcs)) {
        return;
    }
    throw LayoutError("unknown device '" + std::string(device) + "'");
}

}  // namespace qssa::net
