#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ptqm/loop_path.hpp"
#include "ptqm/metric_dynamics.hpp"
#include "ptqm/pt_model.hpp"
#include "ptqm/types.hpp"

namespace ptqm {

/// Fixed-step integration setup. steps is the total step count over [0, T];
/// the trajectory keeps every record_stride-th sample plus the endpoints.
struct EvolutionConfig {
    double total_time = 1.0;
    long steps = 1000;
    Branch branch = Branch::plus;
    long record_stride = 1;

    void validate() const {
        if (!(total_time > 0.0)) throw std::invalid_argument("EvolutionConfig: total_time must be positive");
        if (steps < 100) throw std::invalid_argument("EvolutionConfig: steps must be >= 100");
        if (record_stride < 1) throw std::invalid_argument("EvolutionConfig: record_stride must be >= 1");
    }
};

/// Recorded time evolution: states and the (theta, phi) samples they belong to.
/// base carries the fixed model parameters so the trajectory is self-contained.
struct Trajectory {
    ParamPoint base;
    std::vector<double> times;
    std::vector<State2> states;
    std::vector<std::pair<double, double>> params;
};

/// Per-loop phase bookkeeping. analytic_phase and residual are NaN until a
/// reference value (e.g. the connection line integral) is attached.
struct PhaseReport {
    double total_phase = 0.0;      // mod 2pi
    double dynamical_phase = 0.0;  // -E_branch * T, unwrapped
    double geometric_phase = 0.0;  // total - dynamical, mod 2pi
    double analytic_phase = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
    double unitarity_drift = 0.0;
    double final_transition_prob = 0.0;

    bool has_analytic() const { return std::isfinite(analytic_phase); }
};

/// Fills analytic_phase and the wrapped |geometric - analytic| residual.
inline void attach_analytic_phase(PhaseReport& report, double analytic) {
    report.analytic_phase = wrap_2pi(analytic);
    report.residual = std::abs(wrap_diff(report.geometric_phase, analytic));
}

namespace detail {

/// Classic fixed-step 4th-order Runge-Kutta for i d|psi>/dt = G(t)|psi>.
/// generator(t) must be valid for any t in [0, T].
inline Trajectory rk4_evolve(const std::function<Mat2(double)>& generator,
                             const ParamPoint& base, double total_time, long steps,
                             long record_stride,
                             const std::function<std::pair<double, double>(double)>& angles,
                             const State2& initial) {
    Trajectory traj;
    traj.base = base;
    traj.times.reserve(static_cast<std::size_t>(steps / record_stride) + 2);
    traj.states.reserve(traj.times.capacity());
    traj.params.reserve(traj.times.capacity());

    const double h = total_time / static_cast<double>(steps);
    State2 psi = initial;
    auto record = [&](double t, const State2& y) {
        traj.times.push_back(t);
        traj.states.push_back(y);
        traj.params.push_back(angles(t));
    };
    record(0.0, psi);

    for (long n = 0; n < steps; ++n) {
        const double t = h * static_cast<double>(n);
        const Mat2 g1 = generator(t);
        const Mat2 g2 = generator(t + 0.5 * h);
        const Mat2 g4 = generator(t + h);
        const State2 k1 = -iu * (g1 * psi);
        const State2 k2 = -iu * (g2 * (psi + 0.5 * h * k1));
        const State2 k3 = -iu * (g2 * (psi + 0.5 * h * k2));
        const State2 k4 = -iu * (g4 * (psi + h * k3));
        psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((n + 1) % record_stride == 0 || n + 1 == steps)
            record(h * static_cast<double>(n + 1), psi);
    }
    return traj;
}

inline void check_step_resolution(const ParamPoint& base, double total_time, long steps) {
    const double s = base.splitting_half();
    const double e_max = std::max(std::abs(base.epsilon + s), std::abs(base.epsilon - s));
    const double required = 10.0 * e_max * total_time / pi;
    if (static_cast<double>(steps) < required)
        throw std::invalid_argument("integrate: step count " + std::to_string(steps) +
                                    " cannot resolve max|E|*T; need at least " +
                                    std::to_string(static_cast<long>(std::ceil(required))));
}

}  // namespace detail

/// Integrates i d|Psi>/dt = Lambda(t)|Psi> with Lambda = H - iK along the path,
/// traversed at uniform parameter speed over total_time. The initial state is
/// expected W-normalized at the path start.
inline Trajectory integrate(const LoopPath& path, const EvolutionConfig& cfg,
                            const State2& initial, const Tolerances& tol = {}) {
    cfg.validate();
    detail::check_step_resolution(path.base(), cfg.total_time, cfg.steps);
    path.check_nonsingular(cfg.branch, tol);
    const double t_total = cfg.total_time;
    auto angles = [&](double t) { return path.angles_at(t / t_total); };
    auto generator = [&](double t) {
        const double s = t / t_total;
        const ParamPoint x = path.at(s);
        TangentVector v = path.tangent(s);
        v.d_theta /= t_total;  // d/ds -> d/dt
        v.d_phi /= t_total;
        return build_lambda(x, v);
    };
    return detail::rk4_evolve(generator, path.base(), t_total, cfg.steps,
                              cfg.record_stride, angles, initial);
}

/// Max deviation of <Psi(t)|W[X(t)]|Psi(t)> from its initial value over the
/// recorded samples; the W-unitarity contract of the evolution equation.
inline double unitarity_drift(const Trajectory& traj) {
    if (traj.states.empty()) return 0.0;
    double norm0 = 0.0, drift = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& [th, ph] = traj.params[i];
        const Mat2 w = build_metric(traj.base.at_angles(th, ph));
        const double norm = traj.states[i].dot(w * traj.states[i]).real();
        if (i == 0)
            norm0 = norm;
        else
            drift = std::max(drift, std::abs(norm - norm0));
    }
    return drift;
}

/// Extracts total / dynamical / geometric phases of a closed-loop run.
///
/// The overlap is taken against the stored gauge-fixed eigenvector at the
/// start point only, so no open-path gauge ambiguity enters; the dynamical
/// phase is -E_branch*T, exact because E is constant on (theta, phi) loops.
inline PhaseReport extract_phases(const Trajectory& traj, const LoopPath& path,
                                  const EvolutionConfig& cfg, const Tolerances& tol = {}) {
    if (traj.states.size() < 2)
        throw std::invalid_argument("extract_phases: trajectory has no evolution");
    const ParamPoint x0 = path.at(0.0);
    const EigSystem eig = eigensystem(x0, tol);
    const Mat2 w0 = build_metric(x0);
    const State2& ref = eig.psi(cfg.branch);
    const State2& other = eig.psi(eig.other(cfg.branch));
    const State2& final_state = traj.states.back();

    const cplx overlap = inner_w(w0, ref, final_state, tol);
    if (std::abs(overlap) < 0.5)
        throw std::runtime_error("extract_phases: non-adiabatic run, |overlap| = " +
                                 std::to_string(std::abs(overlap)));

    PhaseReport report;
    report.total_phase = wrap_2pi(std::arg(overlap));
    report.dynamical_phase = -eig.energy(cfg.branch) * cfg.total_time;
    report.geometric_phase = wrap_2pi(std::arg(overlap) - report.dynamical_phase);
    report.final_transition_prob = std::norm(inner_w(w0, other, final_state, tol));
    report.unitarity_drift = unitarity_drift(traj);
    return report;
}

/// Instantaneous adiabaticity diagnostics for the + branch:
/// G_+ drives its phase, T_{+-} drives leakage to the - branch. Both are
/// proportional to the parameter velocity.
struct AdiabaticityDiagnostics {
    cplx g_plus;
    cplx t_plus_minus;
};

inline AdiabaticityDiagnostics adiabaticity_diagnostics(const ParamPoint& x,
                                                        const TangentVector& v,
                                                        const Tolerances& tol = {}) {
    const EigSystem eig = eigensystem(x, tol);
    const Mat2 w = build_metric(x);
    const MField m = build_m(x);
    const EigVectorGradient grad_plus = eigenvector_gradient(x, Branch::plus, tol);
    const HamiltonianGradient grad_h = hamiltonian_gradient(x);

    const State2& psi_p = eig.psi_plus;
    const State2& psi_m = eig.psi_minus;

    const cplx g_theta = psi_p.dot(w * grad_plus.d_theta) + psi_p.dot(w * m.m_theta * psi_p);
    const cplx g_phi = psi_p.dot(w * grad_plus.d_phi) + psi_p.dot(w * m.m_phi * psi_p);

    const double gap = eig.e_minus - eig.e_plus;  // E_n - E_m for m=+, n=-
    const cplx t_theta = psi_p.dot(w * grad_h.d_theta * psi_m) / gap +
                         psi_p.dot(w * m.m_theta * psi_m);
    const cplx t_phi = psi_p.dot(w * grad_h.d_phi * psi_m) / gap +
                       psi_p.dot(w * m.m_phi * psi_m);

    return AdiabaticityDiagnostics{g_theta * v.d_theta + g_phi * v.d_phi,
                                   t_theta * v.d_theta + t_phi * v.d_phi};
}

}  // namespace ptqm
