#pragma once

#include <cmath>

#include "ptqm/types.hpp"

namespace ptqm {

/// Parity operator e_r . sigma for the axis (theta, phi).
inline Mat2 build_parity(double theta, double phi) {
    return pauli_dot(frame_at(theta, phi).e_r);
}

/// H(X) = epsilon + (a e_r + i b cos(delta) e_theta + i b sin(delta) e_phi) . sigma.
/// Trace 2*epsilon, eigenvalues epsilon +- sqrt(a^2 - b^2).
inline Mat2 build_hamiltonian(const ParamPoint& x) {
    const Frame f = frame_at(x.theta, x.phi);
    const CVec3 n = x.a * f.e_r.cast<cplx>() +
                    iu * x.b * std::cos(x.delta) * f.e_theta.cast<cplx>() +
                    iu * x.b * std::sin(x.delta) * f.e_phi.cast<cplx>();
    return x.epsilon * Mat2::Identity() + pauli_dot(n);
}

/// beta(X) = (b/a) (sin(delta) e_theta - cos(delta) e_phi).
inline Vec3 metric_beta(const ParamPoint& x) {
    const Frame f = frame_at(x.theta, x.phi);
    return (x.b / x.a) * (std::sin(x.delta) * f.e_theta - std::cos(x.delta) * f.e_phi);
}

/// Metric W(X) = (|a|/sqrt(a^2-b^2)) (1 + beta . sigma).
/// Hermitian, positive definite, det W = 1.
inline Mat2 build_metric(const ParamPoint& x) {
    const double c = std::abs(x.a) / x.splitting_half();
    return c * (Mat2::Identity() + pauli_dot(metric_beta(x)));
}

namespace detail {

/// Unnormalized gauge-fixed eigenvector components and the squared normalization.
/// top carries the e^{-i phi} phase; bracket is the [1 + (b/a) sin(delta) sin(theta)
/// -+ U cos(theta)] factor of N^2 whose vanishing marks the gauge singularity.
struct EigVectorParts {
    cplx top;
    cplx bottom;
    double n_squared;
    double bracket;
};

/// Evaluates the raw formulas at an explicit (theta, phi), without the [0, pi]
/// clamp of ParamPoint; they are analytic in theta, which keeps centered
/// finite differences clean right up to the poles.
inline EigVectorParts eig_vector_parts_at(const ParamPoint& base, double theta, double phi,
                                          Branch branch) {
    const double s = base.splitting_half();
    const double sign = branch == Branch::plus ? 1.0 : -1.0;
    const double st = std::sin(theta), ct = std::cos(theta);
    const double cd = std::cos(base.delta), sd = std::sin(base.delta);
    const cplx top = std::exp(-iu * phi) * (base.a * st + iu * base.b * cd * ct + base.b * sd);
    const cplx bottom = -base.a * ct + iu * base.b * cd * st + sign * s;
    const double u = s / base.a;
    const double bracket = 1.0 + (base.b / base.a) * sd * st - sign * u * ct;
    return EigVectorParts{top, bottom, 2.0 * std::abs(base.a) * s * bracket, bracket};
}

inline EigVectorParts eig_vector_parts(const ParamPoint& x, Branch branch) {
    return eig_vector_parts_at(x, x.theta, x.phi, branch);
}

/// Normalized gauge-fixed eigenvector of one branch at explicit angles.
inline State2 gauge_eigenvector_at(const ParamPoint& base, double theta, double phi,
                                   Branch branch, const Tolerances& tol = {}) {
    const auto parts = eig_vector_parts_at(base, theta, phi, branch);
    if (parts.bracket < tol.gauge_cut)
        throw gauge_singular_error("gauge_eigenvector: branch " +
                                   std::string(to_string(branch)) +
                                   " singular at theta=" + std::to_string(theta));
    return State2(parts.top, parts.bottom) / std::sqrt(parts.n_squared);
}

}  // namespace detail

/// Gauge-fixed eigenvector of a single branch (the other branch may be singular).
inline State2 branch_eigenvector(const ParamPoint& x, Branch branch, const Tolerances& tol = {}) {
    return detail::gauge_eigenvector_at(x, x.theta, x.phi, branch, tol);
}

/// Eigensystem of H(X): real energies, gauge-fixed W-orthonormal eigenvectors,
/// normalizations and the ratio U = sqrt(a^2-b^2)/a.
struct EigSystem {
    double e_plus;
    double e_minus;
    State2 psi_plus;
    State2 psi_minus;
    double n_plus;
    double n_minus;
    double u;

    double energy(Branch br) const { return br == Branch::plus ? e_plus : e_minus; }
    const State2& psi(Branch br) const { return br == Branch::plus ? psi_plus : psi_minus; }
    Branch other(Branch br) const { return br == Branch::plus ? Branch::minus : Branch::plus; }
};

/// Gauge-fixed eigensystem. The eigenvector gauge is fixed once and for all
/// (e^{-i phi} on the top component); downstream phase bookkeeping relies on it.
/// Throws gauge_singular_error when either normalization collapses below
/// tol.gauge_cut relative to 2|a|sqrt(a^2-b^2) instead of switching patches.
inline EigSystem eigensystem(const ParamPoint& x, const Tolerances& tol = {}) {
    const double s = x.splitting_half();
    const auto plus = detail::eig_vector_parts(x, Branch::plus);
    const auto minus = detail::eig_vector_parts(x, Branch::minus);
    if (plus.bracket < tol.gauge_cut || minus.bracket < tol.gauge_cut)
        throw gauge_singular_error("eigensystem: gauge singular point at " + x.describe() +
                                   " (bracket+ =" + std::to_string(plus.bracket) +
                                   ", bracket- =" + std::to_string(minus.bracket) + ")");
    EigSystem eig;
    eig.e_plus = x.epsilon + s;
    eig.e_minus = x.epsilon - s;
    eig.n_plus = std::sqrt(plus.n_squared);
    eig.n_minus = std::sqrt(minus.n_squared);
    eig.psi_plus = State2(plus.top, plus.bottom) / eig.n_plus;
    eig.psi_minus = State2(minus.top, minus.bottom) / eig.n_minus;
    eig.u = s / x.a;
    return eig;
}

/// Residual ||W H - H^dagger W|| (max entry); the self-adjointness condition
/// that makes the spectrum real.
inline double verify_pseudo_hermiticity(const ParamPoint& x) {
    const Mat2 h = build_hamiltonian(x);
    const Mat2 w = build_metric(x);
    return max_abs(w * h - Mat2(h.adjoint()) * w);
}

/// Metric inner product <phi | W | psi>. W must be Hermitian positive definite.
inline cplx inner_w(const Mat2& w, const State2& phi, const State2& psi,
                    const Tolerances& tol = {}) {
    if (hermiticity_defect(w) > tol.structural * std::max(1.0, max_abs(w)))
        throw std::invalid_argument("inner_w: metric is not Hermitian");
    const double tr = w.trace().real();
    const double det = w.determinant().real();
    if (!(tr > 0.0) || !(det > 0.0))
        throw std::invalid_argument("inner_w: metric is not positive definite");
    return phi.dot(w * psi);  // Eigen's dot conjugates the left argument
}

/// d/d(theta or phi) of H(X), used by the transition diagnostics.
struct HamiltonianGradient {
    Mat2 d_theta;
    Mat2 d_phi;
};

inline HamiltonianGradient hamiltonian_gradient(const ParamPoint& x) {
    const Frame f = frame_at(x.theta, x.phi);
    const double st = std::sin(x.theta), ct = std::cos(x.theta);
    const double cd = std::cos(x.delta), sd = std::sin(x.delta);
    // frame derivatives: d e_r/d theta = e_theta, d e_theta/d theta = -e_r,
    //                    d e_r/d phi = sin(theta) e_phi, d e_theta/d phi = cos(theta) e_phi,
    //                    d e_phi/d phi = -(sin(theta) e_r + cos(theta) e_theta)
    const CVec3 dth = x.a * f.e_theta.cast<cplx>() - iu * x.b * cd * f.e_r.cast<cplx>();
    const CVec3 dph = (x.a * st + iu * x.b * cd * ct) * f.e_phi.cast<cplx>() -
                      iu * x.b * sd * (st * f.e_r.cast<cplx>() + ct * f.e_theta.cast<cplx>());
    return HamiltonianGradient{pauli_dot(dth), pauli_dot(dph)};
}

/// d/d(theta or phi) of the gauge-fixed eigenvector, by direct
/// differentiation of its components (no finite differences).
struct EigVectorGradient {
    State2 d_theta;
    State2 d_phi;
};

inline EigVectorGradient eigenvector_gradient(const ParamPoint& x, Branch branch,
                                              const Tolerances& tol = {}) {
    const double s = x.splitting_half();
    const auto parts = detail::eig_vector_parts(x, branch);
    if (parts.bracket < tol.gauge_cut)
        throw gauge_singular_error("eigenvector_gradient: gauge singular point at " +
                                   x.describe());
    const double sign = branch == Branch::plus ? 1.0 : -1.0;
    const double st = std::sin(x.theta), ct = std::cos(x.theta);
    const double cd = std::cos(x.delta), sd = std::sin(x.delta);
    const cplx phase = std::exp(-iu * x.phi);
    const double n = std::sqrt(parts.n_squared);

    // theta-derivatives of the raw components and of N^2
    const cplx top_th = phase * (x.a * ct - iu * x.b * cd * st);
    const cplx bot_th = x.a * st + iu * x.b * cd * ct;
    const double n2_th = 2.0 * std::abs(x.a) * s * ((x.b / x.a) * sd * ct + sign * (s / x.a) * st);
    const double dn_th = n2_th / (2.0 * n);

    EigVectorGradient g;
    const State2 raw(parts.top, parts.bottom);
    g.d_theta = State2(top_th, bot_th) / n - raw * (dn_th / (n * n));
    g.d_phi = State2(-iu * parts.top, 0.0) / n;  // N is phi-independent
    return g;
}

}  // namespace ptqm
