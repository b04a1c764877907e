#pragma once

#include "qssa/io/case.hpp"
#include "qssa/io/scenario.hpp"
#include "qssa/netmodel/initialize.hpp"

#include <algorithm>
#include <complex>
#include <string>
#include <vector>

namespace qssa::testing {

[[nodiscard]] inline std::string source_path(const std::string& rel) {
    return std::string(QSSA_SOURCE_DIR) + "/" + rel;
}

[[nodiscard]] inline io::ScenarioConfig scenario(const std::string& name) {
    return io::load_scenario_file(source_path("scenarios/" + name + ".json"));
}

[[nodiscard]] inline io::ScenarioCase scenario_case(const std::string& name) {
    return io::build_case(scenario(name));
}

/// Single machine on bus 1 behind a reactance to an infinite bus 2.
[[nodiscard]] inline net::SystemSpec smib_spec(Real p0 = 0.5, Real x_line = 0.3) {
    net::SystemSpec s;
    s.buses.push_back({.id = 1, .type = net::BusType::PQ, .v = 1.0});
    s.buses.push_back({.id = 2, .type = net::BusType::Slack, .v = 1.0});
    s.branches.push_back({.from = 1, .to = 2, .x = x_line});
    net::GeneratorParams g;
    g.id = "g1";
    g.bus = 1;
    g.p0 = p0;
    g.d = 2.0;
    s.generators.push_back(g);
    return s;
}

/// SMIB plus regulator, governor and limiter on g1, a recovery load and a
/// tap changer feeding it.
[[nodiscard]] inline net::SystemSpec full_spec() {
    net::SystemSpec s;
    s.buses.push_back({.id = 1, .type = net::BusType::PQ, .v = 1.0});
    s.buses.push_back({.id = 2, .type = net::BusType::Slack, .v = 1.0});
    s.buses.push_back({.id = 3, .type = net::BusType::PQ});
    s.branches.push_back({.from = 1, .to = 2, .x = 0.2});
    s.branches.push_back({.from = 2, .to = 3, .x = 0.1});
    net::GeneratorParams g;
    g.id = "g1";
    g.bus = 1;
    g.p0 = 0.6;
    g.d = 2.0;
    s.generators.push_back(g);
    net::AvrParams a;
    a.id = "avr1";
    a.generator = "g1";
    s.avrs.push_back(a);
    net::TurbineGovernorParams tg;
    tg.id = "tg1";
    tg.generator = "g1";
    tg.t_3 = 0.2;
    s.governors.push_back(tg);
    net::OxlParams o;
    o.id = "oxl1";
    o.generator = "g1";
    s.oxls.push_back(o);
    net::ErlParams e;
    e.id = "erl1";
    e.bus = 3;
    e.p_l0 = 0.8;
    e.q_l0 = 0.2;
    e.alpha_s = 0.5;
    e.beta_s = 1.0;
    s.erls.push_back(e);
    net::LtcParams l;
    l.id = "ltc1";
    l.branch = 1;
    l.bus = 3;
    s.ltcs.push_back(l);
    return s;
}

/// Pairs every value of `a` with its nearest unused value of `b` and
/// returns the largest pairing distance (infinity on a size mismatch).
[[nodiscard]] inline Real spectrum_distance(std::vector<std::complex<Real>> a, std::vector<std::complex<Real>> b) {
    if (a.size() != b.size()) return std::numeric_limits<Real>::infinity();
    std::vector<bool> used(b.size(), false);
    Real worst = 0.0;
    for (const auto& la : a) {
        std::size_t best = b.size();
        Real dist = std::numeric_limits<Real>::infinity();
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (!used[j] && std::abs(la - b[j]) < dist) {
                dist = std::abs(la - b[j]);
                best = j;
            }
        }
        used[best] = true;
        worst = std::max(worst, dist);
    }
    return worst;
}

}  // namespace qssa::testing
