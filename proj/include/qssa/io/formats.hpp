#pragma once

// Bulk numeric exports as CSV and the verdict report as JSON. Every number
// is written as its shortest round-trip decimal, so parse(write(v)) == v.

#include "qssa/io/scenario.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace qssa::io {

namespace detail {

[[nodiscard]] inline std::string csv_real(Real v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_real(v);
}

[[nodiscard]] inline Real parse_real(std::string_view s, const std::string& where) {
    if (s == "nan") return std::numeric_limits<Real>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<Real>::infinity();
    if (s == "-inf") return -std::numeric_limits<Real>::infinity();
    Real v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw Error(where + ": '" + std::string(s) + "' is not a number");
    }
    return v;
}

[[nodiscard]] inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

[[nodiscard]] inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    return out;
}

inline void close_checked(std::ofstream& out, const std::string& path) {
    out.close();
    if (!out) throw Error("write to '" + path + "' failed");
}

[[nodiscard]] inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

[[nodiscard]] inline Json real_or_null(Real v) {
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

[[nodiscard]] inline Json optional_real(const std::optional<Real>& v) {
    return v ? real_or_null(*v) : Json(nullptr);
}

[[nodiscard]] inline Real real_from(const Json& j) {
    return j.is_null() ? std::numeric_limits<Real>::quiet_NaN() : j.get<Real>();
}

[[nodiscard]] inline std::optional<Real> optional_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<Real>();
}

}  // namespace detail

// -----------------------------------------------------------------------------
// Trajectories and events
// -----------------------------------------------------------------------------

/// Header `t_s,<variable>...` in layout order (z_c, z_d, x, y), one row per sample.
inline void write_trajectory(const sim::Trajectory& traj, const Layout& layout, const std::string& path) {
    auto out = detail::open_out(path);
    out << "t_s";
    for (const auto& n : layout.ordered_names()) out << ',' << n;
    out << '\n';
    for (std::size_t k = 0; k < traj.size(); ++k) {
        out << detail::csv_real(traj.times[k]);
        const Vector flat = traj.states[k].flatten();
        for (Eigen::Index i = 0; i < flat.size(); ++i) out << ',' << detail::csv_real(flat[i]);
        out << '\n';
    }
    detail::close_checked(out, path);
}

struct TrajectoryTable {
    std::vector<std::string> columns;  // without t_s
    std::vector<Real> times;
    std::vector<std::vector<Real>> rows;
};

[[nodiscard]] inline TrajectoryTable read_trajectory(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw Error(path + ": missing header");
    auto header = detail::split_csv(lines[0]);
    if (header.empty() || header[0] != "t_s") throw Error(path + ": header must start with t_s");
    TrajectoryTable t;
    t.columns.assign(header.begin() + 1, header.end());
    for (std::size_t k = 1; k < lines.size(); ++k) {
        if (lines[k].empty()) continue;
        const auto cells = detail::split_csv(lines[k]);
        const std::string where = path + ":" + std::to_string(k + 1);
        if (cells.size() != header.size()) throw Error(where + ": expected " + std::to_string(header.size()) + " cells");
        t.times.push_back(detail::parse_real(cells[0], where));
        std::vector<Real> row;
        row.reserve(cells.size() - 1);
        for (std::size_t c = 1; c < cells.size(); ++c) row.push_back(detail::parse_real(cells[c], where));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Header `t_s,device,old,new`.
inline void write_events(const std::vector<DiscreteEvent>& events, const std::string& path) {
    auto out = detail::open_out(path);
    out << "t_s,device,old,new\n";
    for (const auto& e : events) {
        out << detail::csv_real(e.t) << ',' << e.device << ',' << detail::csv_real(e.old_value) << ','
            << detail::csv_real(e.new_value) << '\n';
    }
    detail::close_checked(out, path);
}

[[nodiscard]] inline std::vector<DiscreteEvent> read_events(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty() || lines[0] != "t_s,device,old,new") throw Error(path + ": bad events header");
    std::vector<DiscreteEvent> out;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        if (lines[k].empty()) continue;
        const auto cells = detail::split_csv(lines[k]);
        const std::string where = path + ":" + std::to_string(k + 1);
        if (cells.size() != 4) throw Error(where + ": expected 4 cells");
        DiscreteEvent e;
        e.t = detail::parse_real(cells[0], where);
        e.device = cells[1];
        e.old_value = detail::parse_real(cells[2], where);
        e.new_value = detail::parse_real(cells[3], where);
        out.push_back(std::move(e));
    }
    return out;
}

// -----------------------------------------------------------------------------
// Gap series
// -----------------------------------------------------------------------------

/// Header `t_s,gap_slow,gap_fast`; the fast gap is `nan` inside boundary layers.
inline void write_gaps(const checker::GapSeries& g, const std::string& path) {
    auto out = detail::open_out(path);
    out << "t_s,gap_slow,gap_fast\n";
    for (std::size_t k = 0; k < g.times.size(); ++k) {
        out << detail::csv_real(g.times[k]) << ',' << detail::csv_real(g.slow[k]) << ','
            << detail::csv_real(g.fast[k]) << '\n';
    }
    detail::close_checked(out, path);
}

// -----------------------------------------------------------------------------
// Basin grids
// -----------------------------------------------------------------------------

/// Header `axis1,axis2,class`, one row per cell centre in index order;
/// axis names, bounds, the SEP and the marked point go to `<path>.meta.json`.
inline void write_grid(const regions::BasinSliceGrid& grid, const Layout& layout, const std::string& path) {
    auto out = detail::open_out(path);
    out << "axis1,axis2,class\n";
    for (int j = 0; j < grid.spec.n2; ++j) {
        for (int i = 0; i < grid.spec.n1; ++i) {
            out << detail::csv_real(grid.center1(i)) << ',' << detail::csv_real(grid.center2(j)) << ','
                << regions::to_string(grid.at(i, j)) << '\n';
        }
    }
    detail::close_checked(out, path);

    Json meta;
    meta["axis1"] = grid.spec.axis1;
    meta["axis2"] = grid.spec.axis2;
    meta["bounds"] = {grid.spec.lo1, grid.spec.hi1, grid.spec.lo2, grid.spec.hi2};
    meta["resolution"] = {grid.spec.n1, grid.spec.n2};
    Json sep;
    const auto names = layout.ordered_names();
    const Vector flat = grid.sep.flatten();
    for (std::size_t k = 0; k < names.size(); ++k) sep[names[k]] = detail::real_or_null(flat[static_cast<Eigen::Index>(k)]);
    meta["sep"] = sep;
    if (grid.marked_point) {
        meta["marked_point"] = {grid.marked_point->first, grid.marked_point->second};
        meta["marked_cell"] = grid.marked_cell ? Json{grid.marked_cell->first, grid.marked_cell->second} : Json(nullptr);
        meta["marked_class"] = grid.marked_class ? Json(std::string(regions::to_string(*grid.marked_class))) : Json(nullptr);
    } else {
        meta["marked_point"] = nullptr;
        meta["marked_cell"] = nullptr;
        meta["marked_class"] = nullptr;
    }
    const std::string meta_path = path + ".meta.json";
    auto mo = detail::open_out(meta_path);
    mo << meta.dump(2) << '\n';
    detail::close_checked(mo, meta_path);
}

struct GridCell {
    Real a = 0.0;
    Real b = 0.0;
    regions::CellClass cls = regions::CellClass::Undecided;
};

[[nodiscard]] inline regions::CellClass parse_cell_class(std::string_view s) {
    for (auto c : {regions::CellClass::Inside, regions::CellClass::Outside, regions::CellClass::Undecided,
                   regions::CellClass::Singular}) {
        if (regions::to_string(c) == s) return c;
    }
    throw Error("unknown cell class '" + std::string(s) + "'");
}

[[nodiscard]] inline std::vector<GridCell> read_grid(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty() || lines[0] != "axis1,axis2,class") throw Error(path + ": bad grid header");
    std::vector<GridCell> out;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        if (lines[k].empty()) continue;
        const auto cells = detail::split_csv(lines[k]);
        const std::string where = path + ":" + std::to_string(k + 1);
        if (cells.size() != 3) throw Error(where + ": expected 3 cells");
        out.push_back({detail::parse_real(cells[0], where), detail::parse_real(cells[1], where), parse_cell_class(cells[2])});
    }
    return out;
}

// -----------------------------------------------------------------------------
// Verdict report
// -----------------------------------------------------------------------------

[[nodiscard]] inline regions::Membership parse_membership(std::string_view s) {
    for (auto m : {regions::Membership::Inside, regions::Membership::Outside, regions::Membership::Undecided}) {
        if (regions::to_string(m) == s) return m;
    }
    throw Error("unknown basin answer '" + std::string(s) + "'");
}

[[nodiscard]] inline sim::Termination parse_termination(std::string_view s) {
    for (auto t : {sim::Termination::HorizonReached, sim::Termination::Converged, sim::Termination::Diverged,
                   sim::Termination::Singular, sim::Termination::SolverFailure, sim::Termination::LimitCycle}) {
        if (sim::to_string(t) == s) return t;
    }
    throw Error("unknown termination '" + std::string(s) + "'");
}

[[nodiscard]] inline checker::OmegaLimit parse_omega(std::string_view s) {
    using checker::OmegaLimit;
    for (auto o : {OmegaLimit::SameSep, OmegaLimit::LtDiverged, OmegaLimit::LtLimitCycle, OmegaLimit::QssDiverged,
                   OmegaLimit::Mismatch, OmegaLimit::Undecided}) {
        if (checker::to_string(o) == s) return o;
    }
    throw Error("unknown omega-limit verdict '" + std::string(s) + "'");
}

/// JSON object mirroring VerdictReport. Times in physical seconds; the
/// slow-time values tau = t * epsilon_scale are added when epsilon_scale != 1.
[[nodiscard]] inline Json report_to_json(const checker::VerdictReport& r) {
    using detail::optional_real;
    using detail::real_or_null;
    Json j;
    j["overall"] = r.overall();
    j["valid"] = r.valid;
    j["failed_condition"] = r.failed_condition;
    j["s1_singularity"] = {{"pass", r.s1_singularity.pass}, {"fail_time", optional_real(r.s1_singularity.fail_time)}};
    const auto& g = r.gamma_s_along_qss;
    j["gamma_s_along_qss"] = {{"pass", g.pass},
                              {"first_violation", optional_real(g.first_violation)},
                              {"violation_margin", real_or_null(g.violation_margin)},
                              {"worst_margin", real_or_null(g.worst_margin)},
                              {"step", g.step},
                              {"samples", g.samples}};
    const auto& ia = r.initial_attraction;
    j["initial_attraction"] = {{"pass", ia.pass},
                               {"answer", std::string(regions::to_string(ia.answer))},
                               {"time", ia.time},
                               {"detail", ia.detail}};
    j["consistent_attraction"] = Json::array();
    for (const auto& v : r.consistent_attraction) {
        Json e = {{"time", v.time},
                  {"devices", v.devices},
                  {"answer", std::string(regions::to_string(v.answer))},
                  {"detail", v.detail}};
        if (r.epsilon_scale != 1.0) e["tau"] = v.time * r.epsilon_scale;
        j["consistent_attraction"].push_back(e);
    }
    j["trajectory_gap"] = real_or_null(r.trajectory_gap);
    j["trajectory_gap_time"] = real_or_null(r.trajectory_gap_time);
    j["fast_gap"] = real_or_null(r.fast_gap);
    j["fast_gap_time"] = real_or_null(r.fast_gap_time);
    j["omega_limit"] = {{"verdict", std::string(checker::to_string(r.omega_limit.verdict))},
                        {"final_distance", real_or_null(r.omega_limit.final_distance)},
                        {"tol", r.omega_limit.tol}};
    j["qss_start_time"] = r.qss_start_time;
    j["epsilon_scale"] = r.epsilon_scale;
    j["delta"] = r.delta;
    j["h_longterm"] = r.h_longterm;
    j["h_qss"] = r.h_qss;
    j["lt_termination"] = std::string(sim::to_string(r.lt_termination));
    j["qss_termination"] = std::string(sim::to_string(r.qss_termination));
    j["lt_end_time"] = r.lt_end_time;
    j["qss_end_time"] = r.qss_end_time;
    j["lt_events"] = r.lt_events;
    j["qss_events"] = r.qss_events;
    j["first_outside_event"] = optional_real(r.first_outside_event);
    j["gap_blowup"] = optional_real(r.gap_blowup);
    j["notes"] = r.notes;
    j["checks"] = Json::array();
    auto sel = r.checks;
    for (auto name : kCheckNames) {
        if (*detail::check_flag(sel, name)) j["checks"].push_back(std::string(name));
    }
    if (r.epsilon_scale != 1.0) {
        j["tau"] = {{"qss_start_time", r.qss_start_time * r.epsilon_scale},
                    {"lt_end_time", r.lt_end_time * r.epsilon_scale},
                    {"qss_end_time", r.qss_end_time * r.epsilon_scale}};
    }
    return j;
}

[[nodiscard]] inline checker::VerdictReport report_from_json(const Json& j) {
    using detail::optional_from;
    using detail::real_from;
    checker::VerdictReport r;
    try {
        r.valid = j.at("valid").get<bool>();
        r.failed_condition = j.at("failed_condition").get<std::string>();
        r.s1_singularity.pass = j.at("s1_singularity").at("pass").get<bool>();
        r.s1_singularity.fail_time = optional_from(j.at("s1_singularity").at("fail_time"));
        const auto& g = j.at("gamma_s_along_qss");
        r.gamma_s_along_qss.pass = g.at("pass").get<bool>();
        r.gamma_s_along_qss.first_violation = optional_from(g.at("first_violation"));
        r.gamma_s_along_qss.violation_margin = real_from(g.at("violation_margin"));
        r.gamma_s_along_qss.worst_margin = real_from(g.at("worst_margin"));
        r.gamma_s_along_qss.step = g.at("step").get<Real>();
        r.gamma_s_along_qss.samples = g.at("samples").get<std::size_t>();
        const auto& ia = j.at("initial_attraction");
        r.initial_attraction.pass = ia.at("pass").get<bool>();
        r.initial_attraction.answer = parse_membership(ia.at("answer").get<std::string>());
        r.initial_attraction.time = ia.at("time").get<Real>();
        r.initial_attraction.detail = ia.at("detail").get<std::string>();
        for (const auto& e : j.at("consistent_attraction")) {
            checker::EventVerdict v;
            v.time = e.at("time").get<Real>();
            v.devices = e.at("devices").get<std::vector<std::string>>();
            v.answer = parse_membership(e.at("answer").get<std::string>());
            v.detail = e.at("detail").get<std::string>();
            r.consistent_attraction.push_back(std::move(v));
        }
        r.trajectory_gap = real_from(j.at("trajectory_gap"));
        r.trajectory_gap_time = real_from(j.at("trajectory_gap_time"));
        r.fast_gap = real_from(j.at("fast_gap"));
        r.fast_gap_time = real_from(j.at("fast_gap_time"));
        const auto& o = j.at("omega_limit");
        r.omega_limit.verdict = parse_omega(o.at("verdict").get<std::string>());
        r.omega_limit.final_distance = real_from(o.at("final_distance"));
        r.omega_limit.tol = o.at("tol").get<Real>();
        r.qss_start_time = j.at("qss_start_time").get<Real>();
        r.epsilon_scale = j.at("epsilon_scale").get<Real>();
        r.delta = j.at("delta").get<Real>();
        r.h_longterm = j.at("h_longterm").get<Real>();
        r.h_qss = j.at("h_qss").get<Real>();
        r.lt_termination = parse_termination(j.at("lt_termination").get<std::string>());
        r.qss_termination = parse_termination(j.at("qss_termination").get<std::string>());
        r.lt_end_time = j.at("lt_end_time").get<Real>();
        r.qss_end_time = j.at("qss_end_time").get<Real>();
        r.lt_events = j.at("lt_events").get<std::size_t>();
        r.qss_events = j.at("qss_events").get<std::size_t>();
        r.first_outside_event = optional_from(j.at("first_outside_event"));
        r.gap_blowup = optional_from(j.at("gap_blowup"));
        r.notes = j.at("notes").get<std::vector<std::string>>();
        r.checks = {false, false, false, false, false, false};
        for (const auto& c : j.at("checks")) {
            bool* flag = detail::check_flag(r.checks, c.get<std::string>());
            if (!flag) throw Error("unknown check '" + c.get<std::string>() + "'");
            *flag = true;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed report: ") + e.what());
    }
    return r;
}

inline void write_report(const checker::VerdictReport& r, const std::string& path) {
    auto out = detail::open_out(path);
    out << report_to_json(r).dump(2) << '\n';
    detail::close_checked(out, path);
}

[[nodiscard]] inline checker::VerdictReport read_report(const std::string& path) {
    const std::string text = read_text_file(path);
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(path + ": " + e.what());
    }
    return report_from_json(j);
}

}  // namespace qssa::io
