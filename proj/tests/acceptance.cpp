// Acceptance report: one PASS/FAIL line per criterion.

#include "support.hpp"

#include "qssa/checker/checker.hpp"
#include "qssa/fixtures/fixtures.hpp"

#include <Eigen/Eigenvalues>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace qssa;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Real seconds_since(Clock::time_point t0) {
    return std::chrono::duration<Real>(Clock::now() - t0).count();
}

std::string num(Real v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

// -----------------------------------------------------------------------------

Outcome tikhonov_scaling() {
    const auto t0 = Clock::now();
    const auto model = fixtures::two_timescale();
    const Real horizon = 0.5;
    std::vector<Real> gaps;
    bool oracle_ok = true;
    std::string detail = "gaps";
    for (Real eps : {1e-1, 1e-2, 1e-3}) {
        auto s = PartitionedState::zeros(model.layout());
        s.zc[0] = 1.0;
        sim::SimConfig cfg;
        cfg.horizon = horizon;
        cfg.qss_start_time = 0.0;
        cfg.stop_when_converged = false;
        cfg.epsilon_scale = eps;
        cfg.h_longterm = eps / 20.0;
        cfg.h_qss = 0.01;
        cfg.newton_tol = 1e-13;
        const auto lt = sim::simulate_longterm(model, {s, 0.0, std::nullopt, false}, cfg);
        const auto qss = sim::simulate_qss(model, {sim::qss_project(model, s), 0.0, std::nullopt, false}, cfg);
        const Real gap = checker::compare_trajectories(model, lt, qss).sup_slow;
        const Real oracle = 1.0 - fixtures::two_timescale_exact(1.0, 0.0, eps, horizon).z;
        oracle_ok = oracle_ok && std::abs(gap - oracle) <= 1e-3 * oracle;
        gaps.push_back(gap);
        detail += " " + num(gap) + " (closed form " + num(oracle) + ")";
    }
    bool ok = oracle_ok;
    for (std::size_t k = 1; k < gaps.size(); ++k) {
        const Real ratio = gaps[k] / gaps[k - 1];
        ok = ok && gaps[k] < gaps[k - 1] && ratio >= 0.03 && ratio <= 0.3;
        detail += "; ratio " + num(ratio);
    }
    const Real secs = seconds_since(t0);
    ok = ok && secs < 10.0;
    return {ok, detail + "; " + num(secs) + " s"};
}

struct ScenarioRun {
    io::ScenarioCase c;
    io::ScenarioConfig cfg;
    checker::DiagnoseResult res;
    Real seconds = 0.0;
};

ScenarioRun run_scenario(const std::string& name) {
    ScenarioRun r;
    const auto t0 = Clock::now();
    r.cfg = testing::scenario(name);
    r.c = io::build_case(r.cfg);
    r.res = checker::diagnose(*r.c.model, r.c.initial, r.cfg.sim, r.cfg.checker);
    r.seconds = seconds_since(t0);
    return r;
}

const ScenarioRun& success_run() {
    static const ScenarioRun r = run_scenario("success");
    return r;
}

const ScenarioRun& failure_run() {
    static const ScenarioRun r = run_scenario("failure");
    return r;
}

Outcome success_scenario() {
    const auto& r = success_run();
    const auto& rep = r.res.report;
    const bool all_inside =
        std::all_of(rep.consistent_attraction.begin(), rep.consistent_attraction.end(),
                    [](const auto& v) { return v.answer == regions::Membership::Inside; });
    const bool ok = rep.valid && all_inside && rep.trajectory_gap <= 1e-2 &&
                    rep.omega_limit.verdict == checker::OmegaLimit::SameSep && rep.omega_limit.final_distance <= 1e-4 &&
                    r.seconds < 60.0;
    return {ok, rep.overall() + "; " + std::to_string(rep.consistent_attraction.size()) + " events" +
                    (all_inside ? " all inside" : " not all inside") + "; sup slow gap " + num(rep.trajectory_gap) +
                    "; final distance " + num(rep.omega_limit.final_distance) + "; " + num(r.seconds) + " s"};
}

Outcome failure_scenario() {
    const auto& r = failure_run();
    const auto& rep = r.res.report;
    const bool lt_unstable =
        rep.lt_termination == sim::Termination::LimitCycle || rep.lt_termination == sim::Termination::Diverged;
    const bool ordered = rep.first_outside_event && rep.gap_blowup && *rep.first_outside_event < *rep.gap_blowup;
    const bool ok = lt_unstable && rep.qss_termination == sim::Termination::Converged &&
                    rep.overall() == "QSS-invalid: consistent-attraction" && ordered && r.seconds < 120.0;
    std::string detail = "long-term " + std::string(sim::to_string(rep.lt_termination)) + ", QSS " +
                         std::string(sim::to_string(rep.qss_termination)) + "; " + rep.overall();
    detail += "; first outside event " + (rep.first_outside_event ? num(*rep.first_outside_event) : "none");
    detail += ", gap blow-up " + (rep.gap_blowup ? num(*rep.gap_blowup) : "none");
    return {ok, detail + "; " + num(r.seconds) + " s"};
}

/// Finite eigenvalues of the pencil (A, diag(I, 0)) by QZ.
std::vector<std::complex<Real>> pencil_spectrum(const fixtures::AffineBlocks& b) {
    const auto nx = b.axx.rows();
    const auto ny = b.ayy.rows();
    Matrix a(nx + ny, nx + ny);
    a << b.axx, b.axy, b.ayx, b.ayy;
    Matrix e = Matrix::Zero(nx + ny, nx + ny);
    e.topLeftCorner(nx, nx) = Matrix::Identity(nx, nx);
    Eigen::GeneralizedEigenSolver<Matrix> qz(a, e);
    std::vector<std::pair<Real, std::complex<Real>>> all;
    for (Eigen::Index i = 0; i < qz.alphas().size(); ++i) {
        const auto alpha = qz.alphas()[i];
        const Real beta = qz.betas()[i];
        all.push_back({std::abs(beta) / (std::abs(alpha) + std::abs(beta)),
                       std::abs(beta) > 0.0 ? alpha / beta : std::complex<Real>(0.0)});
    }
    std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first > r.first; });
    std::vector<std::complex<Real>> out;
    for (Eigen::Index i = 0; i < nx; ++i) out.push_back(all[static_cast<std::size_t>(i)].second);
    return out;
}

/// Average exponential rate of the fast state over the second half of a
/// transient run from a random consistent start.
Real simulated_rate(const fixtures::AffineModel& m, std::mt19937_64& rng) {
    std::normal_distribution<Real> n01;
    auto s = PartitionedState::zeros(m.layout());
    for (Eigen::Index i = 0; i < s.x.size(); ++i) s.x[i] = n01(rng);
    const auto& b = m.blocks();
    if (s.y.size() > 0) s.y = -b.ayy.fullPivLu().solve(b.ayx * s.x);
    sim::SimConfig cfg;
    cfg.horizon = 100.0;
    cfg.qss_start_time = 0.0;
    cfg.stop_when_converged = false;
    cfg.divergence_bound = 1e300;
    cfg.newton_tol = 1e-12;
    cfg.h_transient = 0.02;
    const auto traj = sim::simulate_transient(m, {s, 0.0, std::nullopt, true}, cfg);
    const std::size_t mid = traj.size() / 2;
    const Real a = traj.states[mid].x.norm();
    const Real z = traj.final_state().x.norm();
    return std::log(z / a) / (traj.end_time() - traj.times[mid]);
}

Outcome gamma_s_oracle() {
    std::mt19937_64 rng(20240611);
    std::uniform_int_distribution<int> dim_x(1, 8);
    std::uniform_int_distribution<int> dim_y(0, 6);
    std::uniform_real_distribution<Real> shift(-0.5, 1.5);
    Real worst = 0.0;
    int spectrum_fail = 0, class_fail = 0, stable = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = fixtures::random_linear_dae(rng, dim_x(rng), dim_y(rng), shift(rng));
        const auto s = PartitionedState::zeros(m.layout());
        const auto jb = algebra::jacobian_blocks(m, s);
        const auto reduced = algebra::eigenvalues(algebra::reduced_jacobian(jb));
        const Real d = testing::spectrum_distance(reduced, pencil_spectrum(m.blocks()));
        worst = std::max(worst, d);
        spectrum_fail += d >= 1e-8;
        const auto cls = algebra::classify_point(jb);
        const bool decays = simulated_rate(m, rng) < 0.0;
        class_fail += cls.gamma_s_member != decays;
        stable += cls.gamma_s_member;
    }
    return {spectrum_fail == 0 && class_fail == 0,
            "100 systems, " + std::to_string(stable) + " stable; worst spectrum distance " + num(worst) + "; " +
                std::to_string(spectrum_fail) + " spectrum and " + std::to_string(class_fail) +
                " classification mismatches"};
}

Outcome singularity_detection() {
    const Real crossing = 0.5;
    const Real h = 0.1;
    const auto m = fixtures::singular_sweep(1.0, crossing);
    const auto s = PartitionedState::zeros(m.layout());
    sim::SimConfig cfg;
    cfg.horizon = 2.0;
    cfg.qss_start_time = 0.0;
    cfg.stop_when_converged = false;
    cfg.h_qss = h;
    const auto traj = sim::simulate_qss(m, {s, 0.0, std::nullopt, false}, cfg);
    const bool ok = traj.termination == sim::Termination::Singular && std::abs(traj.end_time() - crossing) <= h + 1e-9;
    return {ok, std::string(sim::to_string(traj.termination)) + " at t=" + num(traj.end_time()) +
                    " s; analytic crossing " + num(crossing) + " s; slow step " + num(h) + " s"};
}

Real decay_error(Real h) {
    const auto m = fixtures::scalar_decay();
    auto s = PartitionedState::zeros(m.layout());
    s.x[0] = 1.0;
    sim::SimConfig cfg;
    cfg.horizon = 1.0;
    cfg.qss_start_time = 0.0;
    cfg.stop_when_converged = false;
    cfg.h_transient = h;
    cfg.newton_tol = 1e-14;
    const auto traj = sim::simulate_transient(m, {s, 0.0, std::nullopt, true}, cfg);
    return std::abs(traj.final_state().x[0] - std::exp(-traj.end_time()));
}

Outcome integrator_order() {
    const Real ratio = decay_error(0.1) / decay_error(0.05);
    Real worst = 0.0;
    std::size_t samples = 0;
    for (const auto* r : {&success_run(), &failure_run()}) {
        for (const auto* traj : {&r->res.lt, &r->res.qss}) {
            for (const auto& st : traj->states) {
                worst = std::max(worst, inf_norm(r->c.model->eval_algebraic(st)));
                ++samples;
            }
        }
    }
    const bool ok = ratio >= 3.5 && ratio <= 4.5 && worst <= 1e-8;
    return {ok, "error ratio " + num(ratio) + "; max |g| " + num(worst) + " over " + std::to_string(samples) +
                    " samples"};
}

int run_binary(const std::string& path) {
    const std::string cmd = "\"" + path + "\" >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome unit_suites() {
    const std::vector<std::pair<std::string, std::string>> suites{
        {"netmodel", QSSA_TEST_NETMODEL}, {"algebra", QSSA_TEST_ALGEBRA}, {"sim", QSSA_TEST_SIM},
        {"regions", QSSA_TEST_REGIONS},   {"checker", QSSA_TEST_CHECKER}, {"io", QSSA_TEST_IO},
        {"cli", QSSA_TEST_CLI}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, path] : suites) {
        const int code = run_binary(path);
        ok = ok && code == 0;
        detail += (detail.empty() ? "" : ", ") + name + (code == 0 ? " ok" : " failed");
    }
    return {ok, detail};
}

/// Largest deviation between each inter-event segment of a long-term run
/// and a fresh run from the segment start with the discrete state frozen.
Real segment_deviation(const HybridModel& m, const sim::Trajectory& lt, sim::SimConfig cfg, std::size_t& segments) {
    std::vector<std::size_t> starts{0};
    for (const auto& e : lt.events) {
        const auto k = lt.index_at(e.t);
        if (k < lt.size() && k != starts.back()) starts.push_back(k);
    }
    Real worst = 0.0;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        const std::size_t a = starts[s];
        const std::size_t b = s + 1 < starts.size() ? starts[s + 1] - 1 : lt.size() - 1;
        if (b <= a) continue;
        cfg.horizon = lt.times[b];
        cfg.stop_when_converged = false;
        cfg.qss_start_time = 0.0;
        const auto fresh = sim::simulate_longterm(m, {lt.states[a], lt.times[a], std::nullopt, true}, cfg);
        if (fresh.size() != b - a + 1) return std::numeric_limits<Real>::infinity();
        for (std::size_t k = 0; k < fresh.size(); ++k) {
            if (std::abs(fresh.times[k] - lt.times[a + k]) > 1e-9) return std::numeric_limits<Real>::infinity();
            worst = std::max(worst, inf_norm(fresh.states[k].flatten() - lt.states[a + k].flatten()));
        }
        ++segments;
    }
    return worst;
}

Outcome hybrid_decoupling() {
    Real worst = 0.0;
    std::size_t segments = 0;
    for (const auto* name : {"success", "failure"}) {
        const auto cfg = testing::scenario(name);
        const auto c = io::build_case(cfg);
        auto run_cfg = cfg.sim;
        run_cfg.stop_when_converged = false;
        const auto lt = sim::simulate_longterm(*c.model, {c.initial, 0.0, std::nullopt, false}, run_cfg);
        worst = std::max(worst, segment_deviation(*c.model, lt, cfg.sim, segments));
    }
    return {worst <= 1e-10 && segments >= 3,
            std::to_string(segments) + " segments; max deviation " + num(worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"time-scale gap scaling on the linear two-timescale fixture", tikhonov_scaling},
        {"success scenario is QSS-valid", success_scenario},
        {"failure scenario is QSS-invalid through consistent attraction", failure_scenario},
        {"stable-set classification matches elimination and simulation", gamma_s_oracle},
        {"singularity crossing detected within one slow step", singularity_detection},
        {"trapezoid order and algebraic feasibility", integrator_order},
        {"unit suites pass", unit_suites},
        {"segments between events match frozen re-simulations", hybrid_decoupling},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << "criterion " << k + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " " << criteria[k].first << " ("
                  << o.detail << ")" << std::endl;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
