#include "support.hpp"

#include "qssa/fixtures/fixtures.hpp"
#include "qssa/regions/regions.hpp"

#include <catch_amalgamated.hpp>

#include <queue>

using namespace qssa;
using Catch::Approx;
using regions::CellClass;
using regions::Membership;

namespace {

/// Cubic fast variable plus an independent stable decay, so that a slice
/// over (x, w) sweeps the cubic's separatrix at x = 0.
fixtures::FunctionModel cubic_plane() {
    Layout lay;
    lay.add(Partition::Fast, "x");
    lay.add(Partition::Fast, "w");
    return fixtures::FunctionModel(std::move(lay), [](const PartitionedState& s, Real) {
        Residuals r;
        r.hc = Vector(0);
        r.g = Vector(0);
        r.f = Vector(2);
        r.f << -s.x[0] * (s.x[0] * s.x[0] - 1.0), -s.x[1];
        return r;
    });
}

PartitionedState cubic_point(const HybridModel& m, Real x) {
    auto s = PartitionedState::zeros(m.layout());
    s.x[0] = x;
    return s;
}

struct SmibBasin {
    io::ScenarioCase c;
    PartitionedState sep;
};

const SmibBasin& smib_basin() {
    static const SmibBasin b = [] {
        SmibBasin out;
        out.c = testing::scenario_case("smib");
        out.sep = regions::find_transient_sep(*out.c.model, out.c.initial).point;
        return out;
    }();
    return b;
}

regions::SliceSpec smib_slice(const PartitionedState& sep, const Layout& lay, int n) {
    const Real d = sep[lay.at("g1.delta")];
    return {"g1.delta", "g1.omega", d - 2.5, d + 2.5, 1.0 - 0.03, 1.0 + 0.03, n, n};
}

}  // namespace

TEST_CASE("cubic equilibria and their stability", "[regions][sep]") {
    const auto m = fixtures::cubic();
    const std::vector<std::pair<Real, Real>> cases{{0.2, 0.0}, {0.9, 1.0}, {-0.9, -1.0}};
    for (const auto& [guess, root] : cases) {
        const auto sep = regions::find_transient_sep(m, cubic_point(m, guess));
        CHECK(sep.point.x[0] == Approx(root).margin(1e-10));
        CHECK(sep.residual <= 1e-10);
        CHECK(sep.cls.gamma_s_member == (root != 0.0));
        CHECK(sep.cls.margin == Approx(root == 0.0 ? 1.0 : -2.0).margin(1e-6));
    }
}

TEST_CASE("linear fixture has a unique stable equilibrium", "[regions][sep]") {
    const auto m = fixtures::scalar_decay(2.0);
    const auto sep = regions::find_transient_sep(m, cubic_point(m, 3.0));
    CHECK(sep.residual <= 1e-10);
    CHECK(std::abs(sep.point.x[0]) <= 1e-10 / 2.0);
    CHECK(sep.cls.gamma_s_member);
    CHECK(sep.cls.margin == Approx(-2.0).margin(1e-6));
}

TEST_CASE("network equilibrium matches a long transient settle", "[regions][sep]") {
    const auto c = testing::scenario_case("success");
    const auto sep = regions::find_transient_sep(*c.model, c.initial);
    REQUIRE(sep.cls.gamma_s_member);
    sim::SimConfig cfg;
    cfg.horizon = 400.0;
    cfg.qss_start_time = 0.0;
    cfg.converge_tol = 1e-11;
    const auto traj = sim::simulate_transient(*c.model, {c.initial, 0.0, std::nullopt, true}, cfg);
    REQUIRE(traj.termination == sim::Termination::Converged);
    CHECK(state_distance(c.model->layout(), traj.final_state(), sep.point, {Partition::Fast, Partition::Algebraic}) <
          1e-6);
}

TEST_CASE("cubic basin membership", "[regions][membership]") {
    const auto m = fixtures::cubic();
    const auto sep = regions::find_transient_sep(m, cubic_point(m, 0.9)).point;
    CHECK(regions::basin_membership(m, {cubic_point(m, 0.5), 0.0, {}}, sep).answer == Membership::Inside);
    CHECK(regions::basin_membership(m, {cubic_point(m, 3.0), 0.0, {}}, sep).answer == Membership::Inside);
    const auto other = regions::basin_membership(m, {cubic_point(m, -0.5), 0.0, {}}, sep);
    CHECK(other.answer == Membership::Outside);
    CHECK(other.final_distance == Approx(2.0).margin(1e-3));
    CHECK(regions::basin_membership(m, {sep, 0.0, {}}, sep).answer == Membership::Inside);
}

TEST_CASE("short horizons leave slow transients undecided", "[regions][membership]") {
    const auto m = fixtures::cubic();
    const auto sep = regions::find_transient_sep(m, cubic_point(m, 0.9)).point;
    regions::BasinOptions opt;
    opt.horizon = 0.5;
    CHECK(regions::basin_membership(m, {cubic_point(m, 1e-3), 0.0, opt}, sep).answer == Membership::Undecided);
}

TEST_CASE("every verified equilibrium lies in its own basin", "[regions][property]") {
    const auto& b = smib_basin();
    CHECK(regions::basin_membership(*b.c.model, {b.sep, 0.0, {}}, b.sep).answer == Membership::Inside);
    const auto c = testing::scenario_case("success");
    const auto sep = regions::find_transient_sep(*c.model, c.initial).point;
    CHECK(regions::basin_membership(*c.model, {sep, 0.0, {}}, sep).answer == Membership::Inside);
}

TEST_CASE("slice sweep flips at the separatrix", "[regions][slice]") {
    const auto m = cubic_plane();
    const auto sep = regions::find_transient_sep(m, cubic_point(m, 0.9)).point;
    const regions::SliceSpec spec{"x", "w", -1.05, 0.95, -0.5, 0.5, 20, 1};
    const auto grid = regions::sample_basin_slice(m, sep, spec);
    int first_inside = -1;
    for (int i = 0; i < spec.n1; ++i) {
        const auto c = grid.at(i, 0);
        CHECK((c == CellClass::Inside || c == CellClass::Outside));
        if (c == CellClass::Inside && first_inside < 0) first_inside = i;
        if (first_inside >= 0) CHECK(c == CellClass::Inside);
    }
    // Centers are -1 + 0.1 i, so the separatrix x = 0 lies at the boundary of cell 10.
    CHECK(std::abs(first_inside - 10) <= 1);
}

TEST_CASE("slice axes must be two distinct fast variables", "[regions][slice]") {
    const auto& b = smib_basin();
    regions::SliceSpec spec{"g1.delta", "g1.delta", 0.0, 1.0, 0.0, 1.0, 2, 2};
    CHECK_THROWS_AS(regions::sample_basin_slice(*b.c.model, b.sep, spec), LayoutError);
    spec.axis2 = "bus1.v";
    CHECK_THROWS_AS(regions::sample_basin_slice(*b.c.model, b.sep, spec), LayoutError);
    spec.axis2 = "nope";
    CHECK_THROWS_AS(regions::sample_basin_slice(*b.c.model, b.sep, spec), LayoutError);
}

TEST_CASE("machine angle-speed slice has a connected inside region", "[regions][slice]") {
    const auto& b = smib_basin();
    const auto& lay = b.c.model->layout();
    const auto spec = smib_slice(b.sep, lay, 21);
    const auto grid = regions::sample_basin_slice(*b.c.model, b.sep, spec, 0.0, {}, 1);

    const auto home = grid.cell_of(b.sep[lay.at("g1.delta")], b.sep[lay.at("g1.omega")]);
    REQUIRE(home);
    CHECK(grid.at(home->first, home->second) == CellClass::Inside);

    std::vector<bool> seen(grid.cells.size(), false);
    std::queue<std::pair<int, int>> todo;
    todo.push(*home);
    seen[grid.index(home->first, home->second)] = true;
    while (!todo.empty()) {
        const auto [i, j] = todo.front();
        todo.pop();
        for (const auto& [di, dj] : std::vector<std::pair<int, int>>{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
            const int a = i + di, c = j + dj;
            if (a < 0 || c < 0 || a >= spec.n1 || c >= spec.n2) continue;
            const auto k = grid.index(a, c);
            if (seen[k] || grid.cells[k] != CellClass::Inside) continue;
            seen[k] = true;
            todo.push({a, c});
        }
    }
    std::size_t inside = 0, reached = 0;
    for (std::size_t k = 0; k < grid.cells.size(); ++k) {
        if (grid.cells[k] != CellClass::Inside) continue;
        ++inside;
        if (seen[k]) ++reached;
    }
    CHECK(inside > 1);
    CHECK(reached == inside);
    CHECK(std::count(grid.cells.begin(), grid.cells.end(), CellClass::Outside) > 0);
}

TEST_CASE("parallel sampling is deterministic", "[regions][slice]") {
    const auto& b = smib_basin();
    const auto spec = smib_slice(b.sep, b.c.model->layout(), 5);
    const auto serial = regions::sample_basin_slice(*b.c.model, b.sep, spec, 0.0, {}, 1);
    const auto parallel = regions::sample_basin_slice(*b.c.model, b.sep, spec, 0.0, {}, 4);
    CHECK(serial.cells == parallel.cells);
}

TEST_CASE("inside points stay inside under small perturbations", "[regions][property]") {
    const regions::BasinOptions opt;
    const auto m = fixtures::cubic();
    const auto sep = regions::find_transient_sep(m, cubic_point(m, 0.9)).point;
    for (Real x : {0.05, 0.3, 1.7, 4.0}) {
        REQUIRE(regions::basin_membership(m, {cubic_point(m, x), 0.0, opt}, sep).answer == Membership::Inside);
        for (Real d : {-opt.rho / 10.0, opt.rho / 10.0}) {
            CHECK(regions::basin_membership(m, {cubic_point(m, x + d), 0.0, opt}, sep).answer == Membership::Inside);
        }
    }
    const auto& b = smib_basin();
    const auto& lay = b.c.model->layout();
    auto p = b.sep;
    p[lay.at("g1.delta")] += 0.8;
    REQUIRE(regions::basin_membership(*b.c.model, {p, 0.0, opt}, b.sep).answer == Membership::Inside);
    for (const char* axis : {"g1.delta", "g1.omega", "g1.e_q_prime"}) {
        auto q = p;
        q[lay.at(axis)] += opt.rho / 10.0;
        CHECK(regions::basin_membership(*b.c.model, {q, 0.0, opt}, b.sep).answer == Membership::Inside);
    }
}

TEST_CASE("a marked point agrees with its enclosing fine cell", "[regions][property]") {
    const regions::BasinOptions opt;
    const auto& b = smib_basin();
    const auto& lay = b.c.model->layout();
    for (Real offset : {0.5, 1.2}) {
        auto p = b.sep;
        p[lay.at("g1.delta")] += offset;
        const Real d = p[lay.at("g1.delta")];
        const Real w = p[lay.at("g1.omega")];
        const Real half = 1.5 * opt.rho;
        const regions::SliceSpec spec{"g1.delta", "g1.omega", d - half, d + half, w - half, w + half, 3, 3};
        const auto grid = regions::sample_basin_slice(*b.c.model, b.sep, spec, 0.0, opt, 1, p);
        REQUIRE(grid.marked_cell);
        REQUIRE(grid.marked_class);
        CHECK(*grid.marked_class == grid.at(grid.marked_cell->first, grid.marked_cell->second));
    }
}
