#include "support.hpp"

#include "qssa/checker/checker.hpp"
#include "qssa/io/formats.hpp"

#include <catch_amalgamated.hpp>

#include <bit>
#include <filesystem>
#include <fstream>
#include <random>

using namespace qssa;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "qssa_io_tests";
    fs::create_directories(dir);
    return dir;
}

std::string scratch(const std::string& name) {
    return (scratch_dir() / name).string();
}

std::vector<std::string> lines_of(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

const char* kSmib = R"({
  "system": {
    "buses": [{"id": 1, "type": "pq", "v": 1.0}, {"id": 2, "type": "slack", "v": 1.0}],
    "branches": [{"from": 1, "to": 2, "x": 0.3}],
    "generators": [{"id": "g1", "bus": 1, "p0": 0.5}]
  }
})";

std::string with_ltc(const std::string& ltc_fields) {
    return R"({
  "system": {
    "buses": [{"id": 1, "type": "pq", "v": 1.0}, {"id": 2, "type": "slack", "v": 1.0}, {"id": 3, "type": "pq", "p_load": 0.5}],
    "branches": [{"from": 1, "to": 2, "x": 0.3}, {"from": 2, "to": 3, "x": 0.1}],
    "generators": [{"id": "g1", "bus": 1, "p0": 0.5}],
    "ltcs": [{"id": "ltc1", "branch": 1, "bus": 3)" +
           ltc_fields + R"(}]
  }
})";
}

bool same_bits(Real a, Real b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

/// Values that stress shortest round-trip printing.
std::vector<Real> awkward_values(std::size_t n) {
    std::vector<Real> v{0.1, 1.0 / 3.0, -0.0, 1e-300, 5e-324, 1.7976931348623157e308, -2.5e-17, 123456789.123456789};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<Real> u(-1e3, 1e3);
    while (v.size() < n) v.push_back(u(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20));
    return v;
}

}  // namespace

TEST_CASE("minimal document gets the documented defaults", "[io][scenario]") {
    const auto cfg = io::load_scenario(kSmib);
    CHECK(cfg.sim.h_transient == 0.01);
    CHECK(cfg.sim.qss_start_time == 30.0);
    CHECK(cfg.sim.h_longterm == 0.05);
    CHECK(cfg.checker.delta == 1e-2);
    CHECK(cfg.checker.omega_tol == 1e-4);
    CHECK(cfg.system.generators.size() == 1);
    const auto echoed = io::scenario_to_json(cfg);
    CHECK(echoed.at("sim").at("h_transient") == 0.01);
    CHECK(echoed.at("sim").at("qss_start_time") == 30.0);
}

TEST_CASE("unknown keys are named in the error", "[io][scenario]") {
    std::string doc = kSmib;
    doc.replace(doc.find("\"p0\""), 4, "\"xd_prim\": 0.3, \"p0\"");
    try {
        (void)io::load_scenario(doc);
        FAIL("no error raised");
    } catch (const io::ValidationError& e) {
        CHECK(e.key().find("xd_prim") != std::string::npos);
        CHECK(std::string(e.what()).find("xd_prim") != std::string::npos);
    }
}

TEST_CASE("tap limits must be ordered", "[io][scenario]") {
    CHECK_NOTHROW(io::load_scenario(with_ltc(R"(, "m_min": 0.9, "m_max": 1.1)")));
    CHECK_THROWS_AS(io::load_scenario(with_ltc(R"(, "m_min": 1.1, "m_max": 0.9)")), io::ValidationError);
}

TEST_CASE("references to missing buses are rejected", "[io][scenario]") {
    std::string doc = kSmib;
    doc.replace(doc.find("\"bus\": 1"), 8, "\"bus\": 9");
    CHECK_THROWS_AS(io::load_scenario(doc), io::ValidationError);
}

TEST_CASE("malformed text reports its line", "[io][scenario]") {
    const std::string doc = "{\n  \"name\": \"x\",\n  \"sim\": {\"horizon\": 10.0,,}\n}";
    try {
        (void)io::load_scenario(doc);
        FAIL("no error raised");
    } catch (const io::ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("trajectory CSV layout", "[io][trajectory]") {
    Layout lay;
    lay.add(Partition::Algebraic, "b.y");
    lay.add(Partition::SlowContinuous, "a.z");
    lay.add(Partition::Fast, "c.x");
    sim::Trajectory t;
    for (Real time : {0.0, 0.5}) {
        auto s = PartitionedState::zeros(lay);
        s.zc[0] = time + 1.0;
        s.x[0] = time + 2.0;
        s.y[0] = time + 3.0;
        t.times.push_back(time);
        t.states.push_back(s);
    }
    const auto path = scratch("two_samples.csv");
    io::write_trajectory(t, lay, path);
    const auto lines = lines_of(path);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "t_s,a.z,c.x,b.y");
    CHECK(lines[1] == "0,1,2,3");
    CHECK(lines[2] == "0.5,1.5,2.5,3.5");
}

TEST_CASE("empty event log gives a header-only file", "[io][events]") {
    const auto path = scratch("no_events.csv");
    io::write_events({}, path);
    const auto lines = lines_of(path);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0] == "t_s,device,old,new");
}

TEST_CASE("trajectory round trip is bit-identical", "[io][roundtrip]") {
    Layout lay;
    lay.add(Partition::SlowContinuous, "z");
    lay.add(Partition::Discrete, "m");
    lay.add(Partition::Fast, "x");
    lay.add(Partition::Algebraic, "y");
    const auto vals = awkward_values(200);
    sim::Trajectory t;
    for (std::size_t k = 0; k + 4 <= vals.size(); k += 4) {
        auto s = PartitionedState::zeros(lay);
        s.zc[0] = vals[k];
        s.zd[0] = vals[k + 1];
        s.x[0] = vals[k + 2];
        s.y[0] = vals[k + 3];
        t.times.push_back(static_cast<Real>(k) * 0.1);
        t.states.push_back(s);
    }
    const auto path = scratch("roundtrip.csv");
    io::write_trajectory(t, lay, path);
    const auto back = io::read_trajectory(path);
    CHECK(back.columns == lay.ordered_names());
    REQUIRE(back.rows.size() == t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        CHECK(same_bits(back.times[k], t.times[k]));
        const Vector flat = t.states[k].flatten();
        for (Eigen::Index i = 0; i < flat.size(); ++i) CHECK(same_bits(back.rows[k][static_cast<std::size_t>(i)], flat[i]));
    }
}

TEST_CASE("events round trip is bit-identical", "[io][roundtrip]") {
    const auto vals = awkward_values(30);
    std::vector<DiscreteEvent> ev;
    for (std::size_t k = 0; k + 3 <= vals.size(); k += 3) {
        ev.push_back({vals[k], "ltc" + std::to_string(k), 0, vals[k + 1], vals[k + 2]});
    }
    const auto path = scratch("events.csv");
    io::write_events(ev, path);
    const auto back = io::read_events(path);
    REQUIRE(back.size() == ev.size());
    for (std::size_t k = 0; k < ev.size(); ++k) {
        CHECK(same_bits(back[k].t, ev[k].t));
        CHECK(back[k].device == ev[k].device);
        CHECK(same_bits(back[k].old_value, ev[k].old_value));
        CHECK(same_bits(back[k].new_value, ev[k].new_value));
    }
}

TEST_CASE("grid round trip is bit-identical", "[io][roundtrip]") {
    Layout lay;
    lay.add(Partition::Fast, "a");
    lay.add(Partition::Fast, "b");
    regions::BasinSliceGrid g;
    g.spec = {"a", "b", -1.0 / 3.0, 0.7, 0.1, 2.9, 3, 4};
    g.sep = PartitionedState::zeros(lay);
    const std::array classes{regions::CellClass::Inside, regions::CellClass::Outside, regions::CellClass::Undecided,
                             regions::CellClass::Singular};
    for (int k = 0; k < 12; ++k) g.cells.push_back(classes[static_cast<std::size_t>(k) % classes.size()]);
    const auto path = scratch("grid.csv");
    io::write_grid(g, lay, path);
    const auto back = io::read_grid(path);
    REQUIRE(back.size() == g.cells.size());
    CHECK(lines_of(path).front() == "axis1,axis2,class");
    for (int j = 0; j < g.spec.n2; ++j) {
        for (int i = 0; i < g.spec.n1; ++i) {
            const auto& c = back[g.index(i, j)];
            CHECK(same_bits(c.a, g.center1(i)));
            CHECK(same_bits(c.b, g.center2(j)));
            CHECK(c.cls == g.at(i, j));
        }
    }
    CHECK(fs::exists(path + ".meta.json"));
}

TEST_CASE("report round trip is bit-identical", "[io][roundtrip]") {
    auto cfg = testing::scenario("failure");
    const auto c = io::build_case(cfg);
    const auto rep = checker::diagnose(*c.model, c.initial, cfg.sim, cfg.checker).report;
    const auto path = scratch("report.json");
    io::write_report(rep, path);
    const auto back = io::read_report(path);
    CHECK(io::report_to_json(back).dump() == io::report_to_json(rep).dump());
    CHECK(back.overall() == rep.overall());
    CHECK(same_bits(back.trajectory_gap, rep.trajectory_gap));
    CHECK(same_bits(back.gamma_s_along_qss.worst_margin, rep.gamma_s_along_qss.worst_margin));
    REQUIRE(back.consistent_attraction.size() == rep.consistent_attraction.size());
    for (std::size_t k = 0; k < rep.consistent_attraction.size(); ++k) {
        CHECK(same_bits(back.consistent_attraction[k].time, rep.consistent_attraction[k].time));
        CHECK(back.consistent_attraction[k].answer == rep.consistent_attraction[k].answer);
        CHECK(back.consistent_attraction[k].devices == rep.consistent_attraction[k].devices);
    }
    const auto j = io::report_to_json(rep);
    for (const char* key : {"s1_singularity", "gamma_s_along_qss", "initial_attraction", "consistent_attraction",
                            "trajectory_gap", "omega_limit", "overall"}) {
        CHECK(j.contains(key));
    }
}

TEST_CASE("column order depends only on the layout", "[io][property]") {
    const auto a = testing::scenario_case("failure");
    const auto b = testing::scenario_case("failure");
    sim::Trajectory t;
    t.times.push_back(0.0);
    t.states.push_back(a.initial);
    const auto pa = scratch("order_a.csv");
    const auto pb = scratch("order_b.csv");
    io::write_trajectory(t, a.model->layout(), pa);
    io::write_trajectory(t, b.model->layout(), pb);
    const auto ha = lines_of(pa).front();
    CHECK(ha == lines_of(pb).front());

    const auto& lay = a.model->layout();
    std::vector<std::string> expected{"t_s"};
    for (auto p : {Partition::SlowContinuous, Partition::Discrete, Partition::Fast, Partition::Algebraic}) {
        for (const auto& n : lay.names(p)) expected.push_back(n);
    }
    std::string joined;
    for (std::size_t k = 0; k < expected.size(); ++k) joined += (k ? "," : "") + expected[k];
    CHECK(ha == joined);
}

TEST_CASE("unwritable paths surface the filesystem error", "[io][errors]") {
    CHECK_THROWS_AS(io::write_events({}, scratch("missing_dir/none/events.csv")), Error);
}
