#pragma once

#include "qssa/fixtures/fixtures.hpp"
#include "qssa/io/scenario.hpp"

#include <memory>

namespace qssa::io {

/// A scenario ready to simulate: the post-contingency model and its state at t = 0.
struct ScenarioCase {
    std::shared_ptr<const HybridModel> model;
    PartitionedState initial;
};

namespace detail {

[[nodiscard]] inline Real fixture_param(const FixtureSpec& f, std::string_view name, Real fallback) {
    for (const auto& [k, v] : f.parameters) {
        if (k == name) return v;
    }
    return fallback;
}

}  // namespace detail

[[nodiscard]] inline std::shared_ptr<const HybridModel> make_fixture(const FixtureSpec& f) {
    if (f.kind == "two-timescale") return std::make_shared<fixtures::AffineModel>(fixtures::two_timescale());
    if (f.kind == "scalar-decay") {
        return std::make_shared<fixtures::AffineModel>(fixtures::scalar_decay(detail::fixture_param(f, "a", 1.0)));
    }
    if (f.kind == "cubic") return std::make_shared<fixtures::FunctionModel>(fixtures::cubic());
    if (f.kind == "singular-sweep") {
        return std::make_shared<fixtures::FunctionModel>(fixtures::singular_sweep(
            detail::fixture_param(f, "rate", 1.0), detail::fixture_param(f, "crossing", 0.5)));
    }
    throw ValidationError("fixture.kind", "unknown fixture '" + f.kind + "'");
}

/// Builds the model and initial state; power systems are initialized at
/// their pre-contingency equilibrium.
[[nodiscard]] inline ScenarioCase build_case(const ScenarioConfig& cfg) {
    ScenarioCase out;
    if (cfg.fixture) {
        out.model = make_fixture(*cfg.fixture);
        const auto& layout = out.model->layout();
        out.initial = PartitionedState::zeros(layout);
        for (const auto& [name, v] : cfg.fixture->initial) {
            const auto slot = layout.find(name);
            if (!slot) throw ValidationError("fixture.initial." + name, "unknown variable");
            out.initial[*slot] = v;
        }
        return out;
    }
    auto pc = net::prepare_case(cfg.system, cfg.contingencies);
    out.model = pc.model;
    out.initial = std::move(pc.initial);
    return out;
}

}  // namespace qssa::io
