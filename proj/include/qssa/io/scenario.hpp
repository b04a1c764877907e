#pragma once

// Scenario documents: the system description, the contingency list, the
// simulation and checker settings and the output file names, loaded from
// JSON with strict key checking and echoed back with every default filled.

#include "qssa/checker/checker.hpp"
#include "qssa/netmodel/initialize.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qssa::io {

using Json = nlohmann::ordered_json;

/// Malformed document text; `line` and `column` are 1-based.
class ParseError : public Error {
public:
    ParseError(std::string what, std::size_t line, std::size_t column)
        : Error(std::move(what)), line_(line), column_(column) {}
    [[nodiscard]] std::size_t line() const { return line_; }
    [[nodiscard]] std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed document with a bad key or value; `key` is the JSON path.
class ValidationError : public Error {
public:
    ValidationError(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct OutputPaths {
    std::string trajectory = "trajectory.csv";
    std::string events = "events.csv";
    std::string report = "report.json";
    std::string gaps = "gaps.csv";
    std::string grid = "grid.csv";
};

/// A built-in synthetic model in place of a power system.
struct FixtureSpec {
    std::string kind;                                  // two-timescale | scalar-decay | cubic | singular-sweep
    std::vector<std::pair<std::string, Real>> parameters;
    std::vector<std::pair<std::string, Real>> initial;  // variable name -> value; others start at 0
};

inline constexpr std::array<std::string_view, 4> kFixtureKinds = {"two-timescale", "scalar-decay", "cubic",
                                                                  "singular-sweep"};

[[nodiscard]] inline std::vector<std::string_view> fixture_parameter_names(std::string_view kind) {
    if (kind == "scalar-decay") return {"a"};
    if (kind == "singular-sweep") return {"rate", "crossing"};
    return {};
}

struct ScenarioConfig {
    std::string name;
    std::optional<FixtureSpec> fixture;
    net::SystemSpec system;
    std::vector<net::Contingency> contingencies;
    sim::SimConfig sim;
    checker::DiagnoseOptions checker;
    OutputPaths outputs;
};

inline constexpr std::array<std::string_view, 6> kCheckNames = {
    "singularity", "gamma-s", "initial-attraction", "consistent-attraction", "trajectory-gap", "omega-limit"};

namespace detail {

inline bool* check_flag(checker::CheckSelection& c, std::string_view name) {
    if (name == "singularity") return &c.singularity;
    if (name == "gamma-s") return &c.gamma_s;
    if (name == "initial-attraction") return &c.initial_attraction;
    if (name == "consistent-attraction") return &c.consistent_attraction;
    if (name == "trajectory-gap") return &c.trajectory_gap;
    if (name == "omega-limit") return &c.omega_limit;
    return nullptr;
}

/// Reads object members against a fixed key set; unknown keys are errors.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ValidationError(path_, "expected an object");
    }

    [[nodiscard]] std::string key(std::string_view k) const {
        return path_.empty() ? std::string(k) : path_ + "." + std::string(k);
    }

    [[nodiscard]] const Json* get(std::string_view k) {
        seen_.insert(std::string(k));
        auto it = j_.find(std::string(k));
        return it == j_.end() ? nullptr : &*it;
    }

    void real(std::string_view k, Real& out, bool null_is_infinite = false) {
        const Json* v = get(k);
        if (!v) return;
        if (v->is_null() && null_is_infinite) {
            out = std::numeric_limits<Real>::infinity();
            return;
        }
        if (!v->is_number()) throw ValidationError(key(k), "expected a number");
        out = v->get<Real>();
    }

    void optional_real(std::string_view k, std::optional<Real>& out) {
        const Json* v = get(k);
        if (!v) return;
        if (v->is_null()) {
            out.reset();
            return;
        }
        if (!v->is_number()) throw ValidationError(key(k), "expected a number or null");
        out = v->get<Real>();
    }

    void integer(std::string_view k, int& out) {
        const Json* v = get(k);
        if (!v) return;
        if (!v->is_number_integer()) throw ValidationError(key(k), "expected an integer");
        out = v->get<int>();
    }

    void index(std::string_view k, std::size_t& out) {
        const Json* v = get(k);
        if (!v) return;
        if (!v->is_number_integer() || v->get<long long>() < 0) {
            throw ValidationError(key(k), "expected a non-negative integer");
        }
        out = v->get<std::size_t>();
    }

    void boolean(std::string_view k, bool& out) {
        const Json* v = get(k);
        if (!v) return;
        if (!v->is_boolean()) throw ValidationError(key(k), "expected true or false");
        out = v->get<bool>();
    }

    void string(std::string_view k, std::string& out) {
        const Json* v = get(k);
        if (!v) return;
        if (!v->is_string()) throw ValidationError(key(k), "expected a string");
        out = v->get<std::string>();
    }

    void required(std::string_view k) const {
        if (j_.find(std::string(k)) == j_.end()) throw ValidationError(key(k), "required key is missing");
    }

    /// Throws for the first member that was never asked for.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ValidationError(key(it.key()), "unknown key");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

template <class P>
void read_params(ObjectReader& r, P& rec) {
    for (const auto& f : net::ParamTable<P>::reals) {
        const bool unlimited = std::isinf(P{}.*(f.ptr));
        r.real(f.name, rec.*(f.ptr), unlimited);
    }
    for (const auto& f : net::ParamTable<P>::optionals) r.optional_real(f.name, rec.*(f.ptr));
}

template <class P>
void write_params(Json& j, const P& rec) {
    for (const auto& f : net::ParamTable<P>::reals) {
        const Real v = rec.*(f.ptr);
        if (std::isfinite(v)) {
            j[std::string(f.name)] = v;
        } else {
            j[std::string(f.name)] = nullptr;
        }
    }
    for (const auto& f : net::ParamTable<P>::optionals) {
        const auto& v = rec.*(f.ptr);
        if (v) {
            j[std::string(f.name)] = *v;
        } else {
            j[std::string(f.name)] = nullptr;
        }
    }
}

[[nodiscard]] inline const Json& array_at(ObjectReader& r, std::string_view k, const Json& empty) {
    const Json* v = r.get(k);
    if (!v) return empty;
    if (!v->is_array()) throw ValidationError(r.key(k), "expected an array");
    return *v;
}

[[nodiscard]] inline std::string item_path(const ObjectReader& r, std::string_view k, std::size_t i) {
    return r.key(k) + "[" + std::to_string(i) + "]";
}

inline void read_system(const Json& j, net::SystemSpec& sys) {
    ObjectReader r(j, "system");
    const Json empty = Json::array();

    const Json& buses = array_at(r, "buses", empty);
    for (std::size_t i = 0; i < buses.size(); ++i) {
        ObjectReader b(buses[i], item_path(r, "buses", i));
        net::Bus bus;
        b.required("id");
        b.integer("id", bus.id);
        std::string type = "pq";
        b.string("type", type);
        if (type == "pq") {
            bus.type = net::BusType::PQ;
        } else if (type == "slack") {
            bus.type = net::BusType::Slack;
        } else {
            throw ValidationError(b.key("type"), "expected \"pq\" or \"slack\"");
        }
        read_params(b, bus);
        b.finish();
        sys.buses.push_back(bus);
    }

    const Json& branches = array_at(r, "branches", empty);
    for (std::size_t i = 0; i < branches.size(); ++i) {
        ObjectReader b(branches[i], item_path(r, "branches", i));
        net::Branch br;
        b.required("from");
        b.required("to");
        b.integer("from", br.from);
        b.integer("to", br.to);
        read_params(b, br);
        b.boolean("in_service", br.in_service);
        b.finish();
        sys.branches.push_back(br);
    }

    auto devices = [&](std::string_view k, auto& list, auto&& identity) {
        const Json& arr = array_at(r, k, empty);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            ObjectReader d(arr[i], item_path(r, k, i));
            typename std::decay_t<decltype(list)>::value_type rec;
            d.required("id");
            d.string("id", rec.id);
            identity(d, rec);
            read_params(d, rec);
            d.finish();
            list.push_back(std::move(rec));
        }
    };
    auto by_generator = [](ObjectReader& d, auto& rec) {
        d.required("generator");
        d.string("generator", rec.generator);
    };
    devices("generators", sys.generators, [](ObjectReader& d, net::GeneratorParams& g) {
        d.required("bus");
        d.integer("bus", g.bus);
    });
    devices("avrs", sys.avrs, by_generator);
    devices("governors", sys.governors, by_generator);
    devices("oxls", sys.oxls, by_generator);
    devices("erls", sys.erls, [](ObjectReader& d, net::ErlParams& e) {
        d.required("bus");
        d.integer("bus", e.bus);
    });
    devices("ltcs", sys.ltcs, [](ObjectReader& d, net::LtcParams& l) {
        d.required("branch");
        d.required("bus");
        d.index("branch", l.branch);
        d.integer("bus", l.bus);
    });
    r.finish();
}

/// Reference and invariant checks that name the offending key.
inline void validate_system(const net::SystemSpec& sys) {
    if (sys.buses.empty()) throw ValidationError("system.buses", "at least one bus is required");
    auto bus_exists = [&](int id) {
        return std::any_of(sys.buses.begin(), sys.buses.end(), [&](const net::Bus& b) { return b.id == id; });
    };
    auto gen_exists = [&](const std::string& id) {
        return std::any_of(sys.generators.begin(), sys.generators.end(),
                           [&](const net::GeneratorParams& g) { return g.id == id; });
    };
    auto path = [](std::string_view list, std::size_t i, std::string_view k) {
        return "system." + std::string(list) + "[" + std::to_string(i) + "]." + std::string(k);
    };
    for (std::size_t i = 0; i < sys.buses.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (sys.buses[i].id == sys.buses[j].id) throw ValidationError(path("buses", i, "id"), "duplicate bus id");
        }
    }
    for (std::size_t i = 0; i < sys.branches.size(); ++i) {
        if (!bus_exists(sys.branches[i].from)) throw ValidationError(path("branches", i, "from"), "unknown bus");
        if (!bus_exists(sys.branches[i].to)) throw ValidationError(path("branches", i, "to"), "unknown bus");
        if (!(sys.branches[i].tap > 0.0)) throw ValidationError(path("branches", i, "tap"), "must be > 0");
    }
    std::set<std::string> ids;
    auto unique_id = [&](std::string_view list, std::size_t i, const std::string& id) {
        if (id.empty()) throw ValidationError(path(list, i, "id"), "must not be empty");
        if (!ids.insert(id).second) throw ValidationError(path(list, i, "id"), "duplicate device id '" + id + "'");
    };
    for (std::size_t i = 0; i < sys.generators.size(); ++i) {
        unique_id("generators", i, sys.generators[i].id);
        if (!bus_exists(sys.generators[i].bus)) throw ValidationError(path("generators", i, "bus"), "unknown bus");
    }
    auto attached = [&](std::string_view list, const auto& recs) {
        for (std::size_t i = 0; i < recs.size(); ++i) {
            unique_id(list, i, recs[i].id);
            if (!gen_exists(recs[i].generator)) {
                throw ValidationError(path(list, i, "generator"), "unknown generator '" + recs[i].generator + "'");
            }
        }
    };
    attached("avrs", sys.avrs);
    attached("governors", sys.governors);
    attached("oxls", sys.oxls);
    for (std::size_t i = 0; i < sys.erls.size(); ++i) {
        unique_id("erls", i, sys.erls[i].id);
        if (!bus_exists(sys.erls[i].bus)) throw ValidationError(path("erls", i, "bus"), "unknown bus");
    }
    for (std::size_t i = 0; i < sys.ltcs.size(); ++i) {
        const auto& l = sys.ltcs[i];
        unique_id("ltcs", i, l.id);
        if (l.branch >= sys.branches.size()) throw ValidationError(path("ltcs", i, "branch"), "branch index out of range");
        if (!bus_exists(l.bus)) throw ValidationError(path("ltcs", i, "bus"), "unknown bus");
        if (l.m_max < l.m_min) throw ValidationError(path("ltcs", i, "m_max"), "m_max must be >= m_min");
        if (!(l.dm > 0.0)) throw ValidationError(path("ltcs", i, "dm"), "must be > 0");
    }
    for (std::size_t i = 0; i < sys.avrs.size(); ++i) {
        if (!(sys.avrs[i].v_r_min < sys.avrs[i].v_r_max)) {
            throw ValidationError(path("avrs", i, "v_r_max"), "v_r_max must be > v_r_min");
        }
    }
    for (std::size_t i = 0; i < sys.governors.size(); ++i) {
        if (!(sys.governors[i].p_min < sys.governors[i].p_max)) {
            throw ValidationError(path("governors", i, "p_max"), "p_max must be > p_min");
        }
    }

    // Remaining per-device invariants live with the device records.
    auto run = [&](std::string_view list, const auto& recs) {
        for (std::size_t i = 0; i < recs.size(); ++i) {
            try {
                recs[i].validate();
            } catch (const Error& e) {
                throw ValidationError("system." + std::string(list) + "[" + std::to_string(i) + "]", e.what());
            }
        }
    };
    run("generators", sys.generators);
    run("avrs", sys.avrs);
    run("governors", sys.governors);
    run("oxls", sys.oxls);
    run("erls", sys.erls);
    run("ltcs", sys.ltcs);
}

inline net::Contingency read_contingency(const Json& j, const std::string& path, const net::SystemSpec& sys) {
    ObjectReader r(j, path);
    net::Contingency c;
    r.real("time", c.time);
    if (c.time != 0.0) throw ValidationError(r.key("time"), "only contingencies at t = 0 are supported");
    std::string type;
    r.required("type");
    r.string("type", type);
    if (type == "branch-outage") {
        c.kind = net::ContingencyKind::BranchOutage;
        r.required("branch");
        r.index("branch", c.branch);
        if (c.branch >= sys.branches.size()) throw ValidationError(r.key("branch"), "branch index out of range");
    } else if (type == "load-step") {
        c.kind = net::ContingencyKind::LoadStep;
        r.required("bus");
        r.integer("bus", c.bus);
        r.real("dp", c.dp);
        r.real("dq", c.dq);
        if (std::none_of(sys.buses.begin(), sys.buses.end(), [&](const net::Bus& b) { return b.id == c.bus; })) {
            throw ValidationError(r.key("bus"), "unknown bus");
        }
    } else if (type == "parameter-set") {
        c.kind = net::ContingencyKind::ParameterSet;
        r.required("device");
        r.required("parameter");
        r.required("value");
        r.string("device", c.device);
        r.string("parameter", c.parameter);
        r.real("value", c.value);
        try {
            auto copy = sys;
            net::set_parameter(copy, c.device, c.parameter, c.value);
        } catch (const Error& e) {
            throw ValidationError(r.key("parameter"), e.what());
        }
    } else {
        throw ValidationError(r.key("type"), "expected branch-outage, load-step or parameter-set");
    }
    r.finish();
    return c;
}

inline void read_sim(const Json& j, sim::SimConfig& s) {
    ObjectReader r(j, "sim");
    r.real("h_transient", s.h_transient);
    r.real("h_longterm", s.h_longterm);
    r.real("h_qss", s.h_qss);
    r.real("horizon", s.horizon);
    r.real("newton_tol", s.newton_tol);
    r.real("algebraic_tol", s.algebraic_tol);
    r.real("epsilon_scale", s.epsilon_scale);
    r.real("qss_start_time", s.qss_start_time);
    r.real("converge_tol", s.converge_tol);
    r.real("converge_hold", s.converge_hold);
    r.real("divergence_bound", s.divergence_bound);
    r.integer("max_halvings", s.max_halvings);
    r.real("limit_cycle_tol", s.limit_cycle_tol);
    r.real("limit_cycle_min_rate", s.limit_cycle_min_rate);
    r.integer("limit_cycle_returns", s.limit_cycle_returns);
    r.real("limit_cycle_settle", s.limit_cycle_settle);
    r.finish();
    try {
        s.validate();
    } catch (const Error& e) {
        throw ValidationError("sim", e.what());
    }
    if (s.max_halvings < 0) throw ValidationError("sim.max_halvings", "must be >= 0");
}

inline void read_basin(const Json& j, regions::BasinOptions& b) {
    ObjectReader r(j, "basin");
    r.real("horizon", b.horizon);
    r.real("rho", b.rho);
    r.real("escape", b.escape);
    r.real("step", b.step);
    r.real("newton_tol", b.newton_tol);
    r.finish();
    try {
        b.validate();
    } catch (const Error& e) {
        throw ValidationError("basin", e.what());
    }
}

inline void read_checker(const Json& j, checker::DiagnoseOptions& o) {
    ObjectReader r(j, "checker");
    r.real("delta", o.delta);
    r.real("omega_tol", o.omega_tol);
    r.integer("threads", o.threads);
    r.real("stability_margin", o.classify.stability_margin);
    r.real("singular_ratio", o.classify.singular_ratio);
    r.finish();
    if (!(o.delta > 0.0)) throw ValidationError("checker.delta", "must be > 0");
    if (!(o.omega_tol > 0.0)) throw ValidationError("checker.omega_tol", "must be > 0");
    if (o.threads < 1) throw ValidationError("checker.threads", "must be >= 1");
}

inline void read_checks(const Json& j, checker::CheckSelection& c) {
    if (!j.is_array()) throw ValidationError("checks", "expected an array of check names");
    c = {false, false, false, false, false, false};
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string key = "checks[" + std::to_string(i) + "]";
        if (!j[i].is_string()) throw ValidationError(key, "expected a string");
        bool* flag = check_flag(c, j[i].get<std::string>());
        if (!flag) throw ValidationError(key, "unknown check '" + j[i].get<std::string>() + "'");
        *flag = true;
    }
}

inline void read_outputs(const Json& j, OutputPaths& o) {
    ObjectReader r(j, "outputs");
    r.string("trajectory", o.trajectory);
    r.string("events", o.events);
    r.string("report", o.report);
    r.string("gaps", o.gaps);
    r.string("grid", o.grid);
    r.finish();
}

inline FixtureSpec read_fixture(const Json& j) {
    ObjectReader r(j, "fixture");
    FixtureSpec f;
    r.required("kind");
    r.string("kind", f.kind);
    if (std::find(kFixtureKinds.begin(), kFixtureKinds.end(), f.kind) == kFixtureKinds.end()) {
        throw ValidationError(r.key("kind"), "unknown fixture '" + f.kind + "'");
    }
    auto pairs = [&](std::string_view k, auto&& allowed, std::vector<std::pair<std::string, Real>>& out) {
        const Json* v = r.get(k);
        if (!v) return;
        if (!v->is_object()) throw ValidationError(r.key(k), "expected an object");
        for (auto it = v->begin(); it != v->end(); ++it) {
            const std::string key = r.key(k) + "." + it.key();
            if (!allowed(it.key())) throw ValidationError(key, "unknown key");
            if (!it->is_number()) throw ValidationError(key, "expected a number");
            out.emplace_back(it.key(), it->get<Real>());
        }
    };
    const auto names = fixture_parameter_names(f.kind);
    pairs("parameters", [&](const std::string& k) { return std::find(names.begin(), names.end(), k) != names.end(); },
          f.parameters);
    pairs("initial", [](const std::string&) { return true; }, f.initial);
    r.finish();
    return f;
}

/// 1-based line and column of byte offset `pos` in `text`.
[[nodiscard]] inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t pos) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t k = 0; k < std::min(pos, text.size()); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

/// Parses and validates a scenario document.
[[nodiscard]] inline ScenarioConfig load_scenario(std::string_view document) {
    Json j;
    try {
        j = Json::parse(document);
    } catch (const nlohmann::json::parse_error& e) {
        // byte is one past the offending character.
        const auto [line, col] = detail::line_column(document, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what(), line,
                         col);
    }

    ScenarioConfig cfg;
    detail::ObjectReader r(j, "");
    r.string("name", cfg.name);
    const Json* system = r.get("system");
    const Json* fixture = r.get("fixture");
    if (system && fixture) throw ValidationError("fixture", "give either system or fixture, not both");
    if (fixture) {
        cfg.fixture = detail::read_fixture(*fixture);
    } else {
        r.required("system");
        detail::read_system(*system, cfg.system);
        detail::validate_system(cfg.system);
    }
    const Json empty = Json::array();
    const Json& cont = detail::array_at(r, "contingencies", empty);
    if (cfg.fixture && !cont.empty()) throw ValidationError("contingencies", "not supported for fixtures");
    for (std::size_t i = 0; i < cont.size(); ++i) {
        cfg.contingencies.push_back(
            detail::read_contingency(cont[i], "contingencies[" + std::to_string(i) + "]", cfg.system));
    }
    if (const Json* s = r.get("sim")) detail::read_sim(*s, cfg.sim);
    if (const Json* b = r.get("basin")) detail::read_basin(*b, cfg.checker.basin);
    if (const Json* c = r.get("checker")) detail::read_checker(*c, cfg.checker);
    if (const Json* c = r.get("checks")) detail::read_checks(*c, cfg.checker.checks);
    if (const Json* o = r.get("outputs")) detail::read_outputs(*o, cfg.outputs);
    r.finish();
    return cfg;
}

[[nodiscard]] inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[nodiscard]] inline ScenarioConfig load_scenario_file(const std::string& path) {
    return load_scenario(read_text_file(path));
}

/// The complete configuration, defaults included; loading the result gives
/// back an identical configuration.
[[nodiscard]] inline Json scenario_to_json(const ScenarioConfig& cfg) {
    Json j;
    j["name"] = cfg.name;
    if (cfg.fixture) {
        Json f;
        f["kind"] = cfg.fixture->kind;
        f["parameters"] = Json::object();
        for (const auto& [k, v] : cfg.fixture->parameters) f["parameters"][k] = v;
        f["initial"] = Json::object();
        for (const auto& [k, v] : cfg.fixture->initial) f["initial"][k] = v;
        j["fixture"] = f;
    }
    Json sys;
    sys["buses"] = Json::array();
    for (const auto& b : cfg.system.buses) {
        Json o;
        o["id"] = b.id;
        o["type"] = b.type == net::BusType::Slack ? "slack" : "pq";
        detail::write_params(o, b);
        sys["buses"].push_back(o);
    }
    sys["branches"] = Json::array();
    for (const auto& br : cfg.system.branches) {
        Json o;
        o["from"] = br.from;
        o["to"] = br.to;
        detail::write_params(o, br);
        o["in_service"] = br.in_service;
        sys["branches"].push_back(o);
    }
    auto devices = [&](const char* k, const auto& list, auto&& identity) {
        sys[k] = Json::array();
        for (const auto& rec : list) {
            Json o;
            o["id"] = rec.id;
            identity(o, rec);
            detail::write_params(o, rec);
            sys[k].push_back(o);
        }
    };
    auto by_generator = [](Json& o, const auto& rec) { o["generator"] = rec.generator; };
    devices("generators", cfg.system.generators, [](Json& o, const net::GeneratorParams& g) { o["bus"] = g.bus; });
    devices("avrs", cfg.system.avrs, by_generator);
    devices("governors", cfg.system.governors, by_generator);
    devices("oxls", cfg.system.oxls, by_generator);
    devices("erls", cfg.system.erls, [](Json& o, const net::ErlParams& e) { o["bus"] = e.bus; });
    devices("ltcs", cfg.system.ltcs, [](Json& o, const net::LtcParams& l) {
        o["branch"] = l.branch;
        o["bus"] = l.bus;
    });
    if (!cfg.fixture) j["system"] = sys;

    j["contingencies"] = Json::array();
    for (const auto& c : cfg.contingencies) {
        Json o;
        o["time"] = c.time;
        o["type"] = std::string(net::to_string(c.kind));
        switch (c.kind) {
            case net::ContingencyKind::BranchOutage: o["branch"] = c.branch; break;
            case net::ContingencyKind::LoadStep:
                o["bus"] = c.bus;
                o["dp"] = c.dp;
                o["dq"] = c.dq;
                break;
            case net::ContingencyKind::ParameterSet:
                o["device"] = c.device;
                o["parameter"] = c.parameter;
                o["value"] = c.value;
                break;
        }
        j["contingencies"].push_back(o);
    }

    const auto& s = cfg.sim;
    j["sim"] = {{"h_transient", s.h_transient},
                {"h_longterm", s.h_longterm},
                {"h_qss", s.h_qss},
                {"horizon", s.horizon},
                {"newton_tol", s.newton_tol},
                {"algebraic_tol", s.algebraic_tol},
                {"epsilon_scale", s.epsilon_scale},
                {"qss_start_time", s.qss_start_time},
                {"converge_tol", s.converge_tol},
                {"converge_hold", s.converge_hold},
                {"divergence_bound", s.divergence_bound},
                {"max_halvings", s.max_halvings},
                {"limit_cycle_tol", s.limit_cycle_tol},
                {"limit_cycle_min_rate", s.limit_cycle_min_rate},
                {"limit_cycle_returns", s.limit_cycle_returns},
                {"limit_cycle_settle", s.limit_cycle_settle}};
    const auto& b = cfg.checker.basin;
    j["basin"] = {{"horizon", b.horizon},
                  {"rho", b.rho},
                  {"escape", b.escape},
                  {"step", b.step},
                  {"newton_tol", b.newton_tol}};
    j["checker"] = {{"delta", cfg.checker.delta},
                    {"omega_tol", cfg.checker.omega_tol},
                    {"threads", cfg.checker.threads},
                    {"stability_margin", cfg.checker.classify.stability_margin},
                    {"singular_ratio", cfg.checker.classify.singular_ratio}};
    j["checks"] = Json::array();
    auto sel = cfg.checker.checks;
    for (auto name : kCheckNames) {
        if (*detail::check_flag(sel, name)) j["checks"].push_back(std::string(name));
    }
    j["outputs"] = {{"trajectory", cfg.outputs.trajectory},
                    {"events", cfg.outputs.events},
                    {"report", cfg.outputs.report},
                    {"gaps", cfg.outputs.gaps},
                    {"grid", cfg.outputs.grid}};
    return j;
}

}  // namespace qssa::io
