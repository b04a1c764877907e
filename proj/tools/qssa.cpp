#include "qssa/io/case.hpp"
#include "qssa/io/formats.hpp"

#include "CLI11.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace qssa;
namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kError = 1, kUnstable = 2, kInvalid = 3 };

struct Common {
    std::string scenario;
    std::string out = ".";
    int threads = 0;  // 0: keep the scenario's value
};

struct Loaded {
    io::ScenarioConfig cfg;
    io::ScenarioCase kase;
};

Loaded load(const Common& c) {
    Loaded l;
    l.cfg = io::load_scenario_file(c.scenario);
    if (c.threads > 0) l.cfg.checker.threads = c.threads;
    l.kase = io::build_case(l.cfg);
    fs::create_directories(c.out);
    std::ofstream echo(fs::path(c.out) / "scenario.resolved.json");
    echo << io::scenario_to_json(l.cfg).dump(2) << '\n';
    return l;
}

std::string out_path(const Common& c, const std::string& file) {
    return (fs::path(c.out) / file).string();
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    return out;
}

Real to_real(const std::string& s, const std::string& what) {
    Real v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw Error(what + ": '" + s + "' is not a number");
    return v;
}

int to_int(const std::string& s, const std::string& what) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw Error(what + ": '" + s + "' is not an integer");
    return v;
}

// -----------------------------------------------------------------------------

int cmd_simulate(const Common& c, const std::string& model_name) {
    auto [cfg, kase] = load(c);
    const auto& model = *kase.model;
    sim::Trajectory traj;
    if (model_name == "transient") {
        traj = sim::simulate_transient(model, {kase.initial, 0.0, std::nullopt, false}, cfg.sim);
    } else if (model_name == "longterm") {
        traj = sim::simulate_longterm(model, {kase.initial, 0.0, std::nullopt, false}, cfg.sim);
    } else {
        traj = sim::simulate_qss(model, {kase.initial, 0.0, std::nullopt, false}, cfg.sim);
    }
    io::write_trajectory(traj, model.layout(), out_path(c, cfg.outputs.trajectory));
    io::write_events(traj.events, out_path(c, cfg.outputs.events));
    std::cout << model_name << ": " << sim::to_string(traj.termination) << " at t=" << format_real(traj.end_time())
              << " s, " << traj.events.size() << " events";
    if (!traj.detail.empty()) std::cout << " (" << traj.detail << ")";
    std::cout << '\n';
    switch (traj.termination) {
        case sim::Termination::HorizonReached:
        case sim::Termination::Converged: return kOk;
        default: return kUnstable;
    }
}

void print_report(const checker::VerdictReport& r) {
    std::cout << "overall: " << r.overall() << '\n';
    std::cout << "long-term: " << sim::to_string(r.lt_termination) << " at t=" << format_real(r.lt_end_time)
              << " s; QSS: " << sim::to_string(r.qss_termination) << " at t=" << format_real(r.qss_end_time) << " s\n";
    for (const auto& v : r.consistent_attraction) {
        std::cout << "event t=" << format_real(v.time) << " s:";
        for (const auto& d : v.devices) std::cout << ' ' << d;
        std::cout << ' ' << regions::to_string(v.answer) << '\n';
    }
    std::cout << "sup slow gap: " << format_real(r.trajectory_gap) << "; omega limit: "
              << checker::to_string(r.omega_limit.verdict) << '\n';
}

int cmd_check(const Common& c) {
    auto [cfg, kase] = load(c);
    const auto res = checker::diagnose(*kase.model, kase.initial, cfg.sim, cfg.checker);
    io::write_report(res.report, out_path(c, cfg.outputs.report));
    io::write_trajectory(res.lt, kase.model->layout(), out_path(c, "longterm_" + cfg.outputs.trajectory));
    io::write_trajectory(res.qss, kase.model->layout(), out_path(c, "qss_" + cfg.outputs.trajectory));
    io::write_events(res.lt.events, out_path(c, "longterm_" + cfg.outputs.events));
    io::write_events(res.qss.events, out_path(c, "qss_" + cfg.outputs.events));
    if (res.gaps) io::write_gaps(*res.gaps, out_path(c, cfg.outputs.gaps));
    print_report(res.report);
    return res.report.valid ? kOk : kInvalid;
}

int cmd_compare(const Common& c, std::optional<Real> delta) {
    auto [cfg, kase] = load(c);
    if (delta) {
        if (!(*delta > 0.0)) throw Error("--delta must be > 0");
        cfg.checker.delta = *delta;
    }
    auto opt = cfg.checker;
    opt.checks = {false, false, false, false, true, true};
    const auto res = checker::diagnose(*kase.model, kase.initial, cfg.sim, opt);
    if (res.gaps) io::write_gaps(*res.gaps, out_path(c, cfg.outputs.gaps));
    io::write_report(res.report, out_path(c, cfg.outputs.report));
    const auto& r = res.report;
    const bool ok = r.trajectory_gap <= opt.delta && r.omega_limit.verdict == checker::OmegaLimit::SameSep;
    std::cout << "sup slow gap: " << format_real(r.trajectory_gap) << " (delta " << format_real(opt.delta)
              << "); omega limit: " << checker::to_string(r.omega_limit.verdict) << '\n';
    std::cout << (ok ? "match" : "differ") << '\n';
    return ok ? kOk : kInvalid;
}

int cmd_basin(const Common& c, const std::string& at_event, const std::string& axes, const std::string& bounds,
              const std::string& res_text) {
    auto [cfg, kase] = load(c);
    const auto& model = *kase.model;
    const auto& layout = model.layout();

    const auto ax = split(axes, ',');
    if (ax.size() != 2) throw Error("--axes needs two variable names");
    for (const auto& a : ax) {
        const auto slot = layout.find(a);
        if (!slot || slot->partition != Partition::Fast) {
            std::string valid;
            for (std::size_t i = 0; i < layout.size(Partition::Fast); ++i) {
                valid += (i ? ", " : "") + layout.name(Partition::Fast, i);
            }
            std::cerr << "error: unknown axis '" << a << "'; valid axes: " << valid << '\n';
            return kError;
        }
    }
    const auto b = split(bounds, ',');
    if (b.size() != 4) throw Error("--bounds needs four numbers a,b,c,d");
    const auto n = split(res_text, ',');
    if (n.size() != 2) throw Error("--res needs two integers n,m");

    regions::SliceSpec spec{ax[0],
                            ax[1],
                            to_real(b[0], "--bounds"),
                            to_real(b[1], "--bounds"),
                            to_real(b[2], "--bounds"),
                            to_real(b[3], "--bounds"),
                            to_int(n[0], "--res"),
                            to_int(n[1], "--res")};

    // Event k (1-based, 0 = initial state) or the event at a given time.
    PartitionedState post = kase.initial;
    Real t = 0.0;
    const bool is_index = at_event.find_first_not_of("0123456789") == std::string::npos;
    if (!(is_index && to_int(at_event, "--at-event") == 0)) {
        auto opt = cfg.checker;
        opt.checks = {false, false, false, false, false, false};
        const auto run = checker::diagnose(model, kase.initial, cfg.sim, opt);
        std::vector<Real> times;
        for (const auto& e : run.lt.events) {
            if (times.empty() || std::abs(times.back() - e.t) > 1e-9) times.push_back(e.t);
        }
        std::optional<Real> chosen;
        if (is_index) {
            const auto k = static_cast<std::size_t>(to_int(at_event, "--at-event"));
            if (k > times.size()) {
                throw Error("--at-event " + at_event + ": the long-term run has " + std::to_string(times.size()) +
                            " events");
            }
            chosen = times[k - 1];
        } else {
            const Real want = to_real(at_event, "--at-event");
            for (Real et : times) {
                if (std::abs(et - want) <= 1e-6) chosen = et;
            }
            if (!chosen) throw Error("--at-event " + at_event + ": no event at that time");
        }
        t = *chosen;
        post = run.lt.states[run.lt.index_at(t)];
    }

    const auto sep = regions::find_transient_sep(model, post);
    const auto grid = regions::sample_basin_slice(model, sep.point, spec, t, cfg.checker.basin, cfg.checker.threads, post);
    io::write_grid(grid, layout, out_path(c, cfg.outputs.grid));

    std::size_t inside = 0;
    for (auto cls : grid.cells) inside += cls == regions::CellClass::Inside;
    std::cout << "t=" << format_real(t) << " s; SEP " << (sep.cls.gamma_s_member ? "verified" : "not verified")
              << "; " << inside << "/" << grid.cells.size() << " cells inside\n";
    std::cout << "marked point (" << format_real(grid.marked_point->first) << ", "
              << format_real(grid.marked_point->second) << "): " << regions::to_string(*grid.marked_class);
    if (grid.marked_cell) {
        std::cout << " in cell (" << grid.marked_cell->first << ", " << grid.marked_cell->second << ")";
    } else {
        std::cout << " outside the grid bounds";
    }
    std::cout << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quasi steady-state validity checker for long-term power system simulation"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", common.scenario, "scenario JSON file")->required();
        sub->add_option("--out", common.out, "output directory")->required();
        sub->add_option("--threads", common.threads, "worker threads for basin checks")->check(CLI::PositiveNumber);
    };

    std::string model_name;
    auto* sim_cmd = app.add_subcommand("simulate", "run one model and write trajectory and events CSV");
    add_common(sim_cmd);
    sim_cmd->add_option("--model", model_name, "transient | longterm | qss")
        ->required()
        ->check(CLI::IsMember({"transient", "longterm", "qss"}));

    auto* check_cmd = app.add_subcommand("check", "run both models and every check; write the report");
    add_common(check_cmd);

    std::optional<Real> delta;
    auto* cmp_cmd = app.add_subcommand("compare", "compare long-term and QSS runs; write the gap series");
    add_common(cmp_cmd);
    cmp_cmd->add_option("--delta", delta, "slow-variable gap threshold, p.u.");

    std::string at_event, axes, bounds, res;
    auto* basin_cmd = app.add_subcommand("basin", "sample a basin slice around a post-jump point");
    add_common(basin_cmd);
    basin_cmd->add_option("--at-event", at_event, "event number k (1-based, 0 = initial state) or event time")
        ->required();
    basin_cmd->add_option("--axes", axes, "two fast variables, var1,var2")->required();
    basin_cmd->add_option("--bounds", bounds, "lo1,hi1,lo2,hi2")->required();
    basin_cmd->add_option("--res", res, "n1,n2")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return kError;
    }

    try {
        if (sim_cmd->parsed()) return cmd_simulate(common, model_name);
        if (check_cmd->parsed()) return cmd_check(common);
        if (cmp_cmd->parsed()) return cmd_compare(common, delta);
        if (basin_cmd->parsed()) return cmd_basin(common, at_event, axes, bounds, res);
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << common.scenario << ": " << e.what() << '\n';
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return kError;
}
