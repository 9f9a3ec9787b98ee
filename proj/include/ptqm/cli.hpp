#pragma once

// Command implementations behind the ptqm command-line tool. They are kept in
// the library so the test suite can drive them directly; the binary in tools/
// only parses flags and dispatches.

#include <atomic>
#include <charconv>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ptqm/ptqm.hpp"

namespace ptqm::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_contract = 1;  // a numerical contract was violated
inline constexpr int exit_usage = 2;     // bad flags or config

using nlohmann::json;

/// 12 significant digits, locale-independent (std::to_chars).
inline std::string fmt12(double v) {
    char buf[48];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

struct LoopSpec {
    std::string kind = "latitude";  // latitude | polygon | custom
    double theta0 = pi / 2;
    double phi0 = 0.0;
    int winding = 1;
    std::vector<std::pair<double, double>> vertices;
};

/// One fully-specified run: model parameters, loop, evolution setup, outputs.
/// All angles are radians.
struct RunConfig {
    double epsilon = 0.0;
    double a = 1.0;
    double b = 0.0;
    double delta = 0.0;
    LoopSpec loop;
    double total_time = 2000.0;
    long steps = 400000;
    Branch branch = Branch::plus;
    long record_stride = 1000;
    std::string csv_path;
    int verbosity = 1;
    Tolerances tol;

    ParamPoint base_point() const {
        const double theta = loop.kind == "latitude" ? loop.theta0 : loop.vertices.at(0).first;
        const double phi = loop.kind == "latitude" ? loop.phi0 : loop.vertices.at(0).second;
        return ParamPoint(epsilon, a, b, theta, phi, delta);
    }

    LoopPath make_path() const {
        const ParamPoint base = base_point();
        if (loop.kind == "latitude") return LoopPath::latitude(base, loop.theta0, loop.winding, loop.phi0);
        if (loop.kind == "polygon") return LoopPath::polygon(base, loop.vertices);
        if (loop.kind == "custom") return LoopPath::custom(base, loop.vertices);
        throw std::invalid_argument("RunConfig: unknown loop kind '" + loop.kind + "'");
    }

    EvolutionConfig evolution() const { return EvolutionConfig{total_time, steps, branch, record_stride}; }

    static RunConfig from_json(const json& j);
    json to_json() const;
};

namespace detail_cli {

inline void parse_tolerances(const json& j, Tolerances& tol) {
    for (const auto& [key, val] : j.items()) {
        if (key == "structural") tol.structural = val.get<double>();
        else if (key == "eigen") tol.eigen = val.get<double>();
        else if (key == "gauge_cut") tol.gauge_cut = val.get<double>();
        else if (key == "reality") tol.reality = val.get<double>();
        else if (key == "quadrature") tol.quadrature = val.get<double>();
        else if (key == "phase") tol.phase = val.get<double>();
        else if (key == "drift") tol.drift = val.get<double>();
        else throw std::invalid_argument("config: unknown tolerance key '" + key + "'");
    }
}

inline Branch parse_branch(const std::string& s) {
    if (s == "+" || s == "plus") return Branch::plus;
    if (s == "-" || s == "minus") return Branch::minus;
    throw std::invalid_argument("config: branch must be '+' or '-'");
}

}  // namespace detail_cli

inline RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    const json& model = j.at("model");
    c.epsilon = model.value("epsilon", 0.0);
    c.a = model.at("a").get<double>();
    c.b = model.value("b", 0.0);
    c.delta = model.value("delta", 0.0);

    const json& loop = j.at("loop");
    c.loop.kind = loop.value("kind", "latitude");
    if (c.loop.kind == "latitude") {
        c.loop.theta0 = loop.at("theta0").get<double>();
        c.loop.phi0 = loop.value("phi0", 0.0);
        c.loop.winding = loop.value("winding", 1);
    } else {
        for (const auto& v : loop.at("vertices"))
            c.loop.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    }

    if (j.contains("evolution")) {
        const json& ev = j.at("evolution");
        c.total_time = ev.value("total_time", c.total_time);
        c.steps = ev.value("steps", c.steps);
        c.branch = detail_cli::parse_branch(ev.value("branch", std::string("+")));
        c.record_stride = ev.value("record_stride", c.record_stride);
    }
    if (j.contains("output")) {
        c.csv_path = j.at("output").value("csv", std::string());
        c.verbosity = j.at("output").value("verbosity", 1);
    }
    if (j.contains("tolerances")) detail_cli::parse_tolerances(j.at("tolerances"), c.tol);
    return c;
}

inline json RunConfig::to_json() const {
    json j;
    j["model"] = {{"epsilon", epsilon}, {"a", a}, {"b", b}, {"delta", delta}};
    if (loop.kind == "latitude") {
        j["loop"] = {{"kind", loop.kind}, {"theta0", loop.theta0}, {"phi0", loop.phi0},
                     {"winding", loop.winding}};
    } else {
        json verts = json::array();
        for (const auto& [th, ph] : loop.vertices) verts.push_back({th, ph});
        j["loop"] = {{"kind", loop.kind}, {"vertices", verts}};
    }
    j["evolution"] = {{"total_time", total_time}, {"steps", steps},
                      {"branch", std::string(to_string(branch))}, {"record_stride", record_stride}};
    if (!csv_path.empty() || verbosity != 1) j["output"] = {{"csv", csv_path}, {"verbosity", verbosity}};
    return j;
}

/// Axis of a parameter sweep: either an explicit value list or a uniform grid.
struct AxisSpec {
    std::vector<double> values;

    static AxisSpec from_json(const json& j) {
        AxisSpec ax;
        if (j.contains("values")) {
            for (const auto& v : j.at("values")) ax.values.push_back(v.get<double>());
        } else {
            const double lo = j.at("min").get<double>();
            const double hi = j.at("max").get<double>();
            const long n = j.at("count").get<long>();
            if (n < 1) throw std::invalid_argument("config: axis count must be >= 1");
            for (long i = 0; i < n; ++i)
                ax.values.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) /
                                                          static_cast<double>(n - 1));
        }
        if (ax.values.empty()) throw std::invalid_argument("config: empty axis");
        return ax;
    }
};

/// Grid sweep over any of {theta0, b_over_a, delta}; remaining parameters come
/// from the embedded run config. Rows are emitted in lexicographic grid order.
struct SweepSpec {
    RunConfig base;
    AxisSpec theta0;
    AxisSpec b_over_a;
    AxisSpec delta;
    bool evolution_enabled = false;

    static SweepSpec from_json(const json& j) {
        SweepSpec s;
        s.base = RunConfig::from_json(j);
        if (s.base.loop.kind != "latitude")
            throw std::invalid_argument("config: sweeps cover latitude loop families");
        s.theta0.values = {s.base.loop.theta0};
        s.b_over_a.values = {s.base.b / s.base.a};
        s.delta.values = {s.base.delta};
        if (j.contains("axes")) {
            for (const auto& [key, val] : j.at("axes").items()) {
                if (key == "theta0") s.theta0 = AxisSpec::from_json(val);
                else if (key == "b_over_a") s.b_over_a = AxisSpec::from_json(val);
                else if (key == "delta") s.delta = AxisSpec::from_json(val);
                else throw std::invalid_argument("config: unknown sweep axis '" + key + "'");
            }
        }
        for (double r : s.b_over_a.values)
            if (!(r > -1.0 && r < 1.0))
                throw std::invalid_argument("config: b_over_a axis must stay inside (-1, 1)");
        if (j.contains("tasks")) s.evolution_enabled = j.at("tasks").value("evolution", false);
        return s;
    }
};

// ---------------------------------------------------------------------------
// validate: randomized invariant suite
// ---------------------------------------------------------------------------

inline ParamPoint random_validate_point(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> mag(0.1, 10.0);
    std::uniform_real_distribution<double> ratio(-0.95, 0.95);
    std::uniform_real_distribution<double> th(0.0, pi);
    std::uniform_real_distribution<double> ang(-2.0 * pi, 2.0 * pi);
    std::uniform_real_distribution<double> eps(-5.0, 5.0);
    std::bernoulli_distribution flip(0.5);
    const double a = flip(gen) ? -mag(gen) : mag(gen);
    return ParamPoint(eps(gen), a, ratio(gen) * a, th(gen), ang(gen), ang(gen));
}

/// Runs the randomized invariant suite and prints one line per invariant.
/// Returns exit_ok iff every residual is within its threshold.
inline int run_validate(std::uint64_t seed, long draws, std::ostream& out,
                        double tolerance_override = 0.0) {
    if (draws < 1) {
        out << "validate: draws must be >= 1\n";
        return exit_usage;
    }
    std::mt19937_64 gen(seed);

    struct Check {
        const char* name;
        double threshold;
        double worst = 0.0;
        ParamPoint at;
    };
    Check checks[] = {
        {"pseudo_hermiticity |WH - H^W|", 1e-12, 0.0, {}},
        {"metric_det |det W - 1|", 1e-12, 0.0, {}},
        {"metric_equation |M_solve - M_closed|", 1e-10, 0.0, {}},
        {"eta_square |eta^2 - W|", 1e-12, 0.0, {}},
        {"h_closed_form |eta H eta^-1 - h|", 1e-12, 0.0, {}},
    };
    if (tolerance_override > 0.0)
        for (auto& c : checks) c.threshold = tolerance_override;

    for (long i = 0; i < draws; ++i) {
        const ParamPoint x = random_validate_point(gen);
        auto track = [&](Check& c, double r) {
            if (r > c.worst) {
                c.worst = r;
                c.at = x;
            }
        };
        track(checks[0], verify_pseudo_hermiticity(x));

        const Mat2 w = build_metric(x);
        track(checks[1], std::abs(w.determinant() - cplx(1.0)));

        const MField m = build_m(x);
        const MetricGradient g = metric_gradient(x);
        const double m_res =
            std::max((solve_metric_equation(w, g.d_theta) - m.m_theta).cwiseAbs().maxCoeff(),
                     (solve_metric_equation(w, g.d_phi) - m.m_phi).cwiseAbs().maxCoeff());
        track(checks[2], m_res);

        const EtaPair e = build_eta(x);
        track(checks[3], max_abs(e.eta * e.eta - w));

        const Mat2 h_closed = x.epsilon * Mat2::Identity() +
                              x.u_ratio() * std::abs(x.a) * pauli_dot(frame_at(x.theta, x.phi).e_r);
        track(checks[4], max_abs(e.eta * build_hamiltonian(x) * e.eta_inv - h_closed));
    }

    bool ok = true;
    out << "validate: seed=" << seed << " draws=" << draws << "\n";
    for (const auto& c : checks) {
        const bool pass = c.worst <= c.threshold;
        ok = ok && pass;
        out << "  " << (pass ? "ok  " : "FAIL") << " " << c.name << " max=" << fmt12(c.worst)
            << " tol=" << fmt12(c.threshold);
        if (!pass) out << " at " << c.at.describe();
        out << "\n";
    }
    return ok ? exit_ok : exit_contract;
}

// ---------------------------------------------------------------------------
// phase: analytic loop quantities
// ---------------------------------------------------------------------------

inline int run_phase(const RunConfig& cfg, std::ostream& out, std::ostream& diag) {
    try {
        const LoopPath path = cfg.make_path();
        const ParamPoint base = path.base();
        const double gamma = line_integral(path, true, Branch::plus, default_panels, cfg.tol);
        const FluxDecomposition flux = flux_formula(path, base, default_panels, cfg.tol);
        const double omega = solid_angle(path, default_panels, cfg.tol);
        json j{{"gamma_analytic", gamma},
               {"omega", omega},
               {"monopole_part", flux.monopole_part},
               {"string_part", flux.string_part},
               {"flux_total", flux.total},
               {"winding", path.winding()},
               {"u", base.u_ratio()}};
        out << j.dump(2) << "\n";
        return exit_ok;
    } catch (const gauge_singular_error& e) {
        diag << "phase: singular loop: " << e.what() << "\n";
        return exit_contract;
    }
}

// ---------------------------------------------------------------------------
// evolve: PT-picture (and optionally Hermitian-picture) time evolution
// ---------------------------------------------------------------------------

inline json report_to_json(const char* picture, const PhaseReport& r) {
    json j{{"picture", picture},
           {"total_phase", r.total_phase},
           {"dynamical_phase", r.dynamical_phase},
           {"geometric_phase", r.geometric_phase},
           {"unitarity_drift", r.unitarity_drift},
           {"transition_prob", r.final_transition_prob}};
    if (r.has_analytic()) {
        j["analytic_phase"] = r.analytic_phase;
        j["residual"] = r.residual;
    }
    return j;
}

inline int run_evolve(const RunConfig& cfg, bool hermitian_picture, std::ostream& out,
                      std::ostream& diag) {
    const LoopPath path = cfg.make_path();
    const EvolutionConfig ev = cfg.evolution();

    const double analytic = ev.branch == Branch::plus
                                ? line_integral(path, true, Branch::plus, default_panels, cfg.tol)
                                : line_integral(path, false, Branch::minus, default_panels, cfg.tol);

    const State2 initial = eigensystem(path.at(0.0), cfg.tol).psi(ev.branch);
    const Trajectory traj = integrate(path, ev, initial, cfg.tol);
    PhaseReport pt = extract_phases(traj, path, ev, cfg.tol);
    attach_analytic_phase(pt, analytic);

    json runs = json::array();
    runs.push_back(report_to_json("pt", pt));
    bool ok = pt.residual <= cfg.tol.phase;

    if (hermitian_picture) {
        PhaseReport hm = evolve_hermitian_picture(path, ev, true, cfg.tol);
        attach_analytic_phase(hm, analytic);
        runs.push_back(report_to_json("hermitian", hm));
        ok = ok && hm.residual <= cfg.tol.phase &&
             std::abs(wrap_diff(hm.geometric_phase, pt.geometric_phase)) <= cfg.tol.phase;
    }

    json j{{"gamma_analytic", analytic}, {"runs", runs}};
    out << j.dump(2) << "\n";
    if (!ok) diag << "evolve: residual above tolerance " << fmt12(cfg.tol.phase) << "\n";
    return ok ? exit_ok : exit_contract;
}

// ---------------------------------------------------------------------------
// sweep: latitude-family grid, buffered work pool, deterministic CSV
// ---------------------------------------------------------------------------

inline constexpr const char* sweep_csv_header =
    "theta0,b_over_a,delta,winding,U,omega,gamma_analytic,gamma_numeric,residual,"
    "unitarity_drift,transition_prob";

namespace detail_cli {

struct SweepRow {
    bool skipped = false;
    std::string warning;
    double theta0 = 0, b_over_a = 0, delta = 0;
    int winding = 0;
    double u = 0, omega = 0, gamma_analytic = 0;
    std::optional<PhaseReport> evolution;
};

inline SweepRow sweep_point(const SweepSpec& spec, double theta0, double b_over_a, double delta,
                            bool with_evolution) {
    SweepRow row;
    row.theta0 = theta0;
    row.b_over_a = b_over_a;
    row.delta = delta;
    row.winding = spec.base.loop.winding;
    try {
        const ParamPoint base(spec.base.epsilon, spec.base.a, b_over_a * spec.base.a, theta0,
                              spec.base.loop.phi0, delta);
        const LoopPath path = LoopPath::latitude(base, theta0, spec.base.loop.winding,
                                                 spec.base.loop.phi0);
        row.u = base.u_ratio();
        row.omega = solid_angle(path, default_panels, spec.base.tol);
        row.gamma_analytic = line_integral(path, true, Branch::plus, default_panels, spec.base.tol);
        if (with_evolution) {
            const EvolutionConfig ev = spec.base.evolution();
            const State2 initial = eigensystem(path.at(0.0), spec.base.tol).psi(ev.branch);
            PhaseReport rep = extract_phases(integrate(path, ev, initial, spec.base.tol), path, ev,
                                             spec.base.tol);
            attach_analytic_phase(rep, row.gamma_analytic);
            row.evolution = rep;
        }
    } catch (const gauge_singular_error& e) {
        row.skipped = true;
        row.warning = e.what();
    } catch (const std::runtime_error& e) {
        row.skipped = true;
        row.warning = e.what();
    }
    return row;
}

}  // namespace detail_cli

inline int run_sweep(const SweepSpec& spec, bool no_evolution, std::ostream& csv,
                     std::ostream& diag) {
    const bool with_evolution = spec.evolution_enabled && !no_evolution;

    struct Point {
        double theta0, b_over_a, delta;
    };
    std::vector<Point> grid;
    for (double t : spec.theta0.values)
        for (double r : spec.b_over_a.values)
            for (double d : spec.delta.values) grid.push_back({t, r, d});

    std::vector<detail_cli::SweepRow> rows(grid.size());
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                             static_cast<unsigned>(grid.size())));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= grid.size()) return;
                rows[i] = detail_cli::sweep_point(spec, grid[i].theta0, grid[i].b_over_a,
                                                  grid[i].delta, with_evolution);
            }
        });
    for (auto& t : pool) t.join();

    csv << sweep_csv_header << "\n";
    long emitted = 0;
    for (const auto& row : rows) {
        if (row.skipped) {
            diag << "sweep: skipping singular point theta0=" << fmt12(row.theta0)
                 << " b_over_a=" << fmt12(row.b_over_a) << " delta=" << fmt12(row.delta) << ": "
                 << row.warning << "\n";
            continue;
        }
        csv << fmt12(row.theta0) << ',' << fmt12(row.b_over_a) << ',' << fmt12(row.delta) << ','
            << row.winding << ',' << fmt12(row.u) << ',' << fmt12(row.omega) << ','
            << fmt12(row.gamma_analytic) << ',';
        if (row.evolution) {
            const PhaseReport& r = *row.evolution;
            csv << fmt12(r.geometric_phase) << ',' << fmt12(r.residual) << ','
                << fmt12(r.unitarity_drift) << ',' << fmt12(r.final_transition_prob);
        } else {
            csv << ",,,";
        }
        csv << "\n";
        ++emitted;
    }
    if (spec.base.verbosity > 0)
        diag << "sweep: " << emitted << " rows (" << (grid.size() - emitted) << " skipped)\n";
    return exit_ok;
}

}  // namespace ptqm::cli
