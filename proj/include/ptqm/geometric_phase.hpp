#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "ptqm/loop_path.hpp"
#include "ptqm/metric_dynamics.hpp"
#include "ptqm/pt_model.hpp"
#include "ptqm/types.hpp"

namespace ptqm {

/// The two connection components (F_theta, F_phi) at a point.
struct ConnectionSample {
    double f_theta;
    double f_phi;
};

/// Monopole-plus-string decomposition of the loop phase:
///   total = -(U/2) Omega + (1 + U) pi winding   (mod 2pi).
struct FluxDecomposition {
    double monopole_part;
    double string_part;
    double total;
};

/// Smooth single-valued phase function on (theta, phi), for gauge checks.
using GaugeFn = std::function<double(double theta, double phi)>;

/// Closed-form + branch connection:
///   F_phi   = (1 + U cos(theta)) / 2
///   F_theta = (b/a) cos(delta) / (2 [1 + (b/a) sin(delta) sin(theta) - U cos(theta)])
/// The denominator is the N_+^2 bracket; it can only vanish as b -> 0, theta -> 0.
inline ConnectionSample connection_analytic(const ParamPoint& x, const Tolerances& tol = {}) {
    const double u = x.u_ratio();
    const double denom = 1.0 + (x.b / x.a) * std::sin(x.delta) * std::sin(x.theta) -
                         u * std::cos(x.theta);
    if (denom < tol.gauge_cut)
        throw gauge_singular_error("connection_analytic: vanishing denominator at " +
                                   x.describe());
    return ConnectionSample{(x.b / x.a) * std::cos(x.delta) / (2.0 * denom),
                            0.5 * (1.0 + u * std::cos(x.theta))};
}

namespace detail {

inline constexpr double fd_step = 1e-6;  // balances truncation vs roundoff in doubles

/// i [ <psi|W|d psi> + <psi|W M|psi> ] per direction, with d psi by centered
/// differences of the gauge-fixed eigenvector (optionally gauge-rotated by
/// e^{i f}). Returns the two complex values before taking real parts.
struct ComplexConnection {
    cplx f_theta;
    cplx f_phi;
};

inline ComplexConnection connection_numeric_complex(const ParamPoint& x, Branch branch,
                                                    const GaugeFn* gauge,
                                                    const Tolerances& tol) {
    auto vec = [&](double th, double ph) {
        State2 v = gauge_eigenvector_at(x, th, ph, branch, tol);
        if (gauge) v *= std::exp(iu * (*gauge)(th, ph));
        return v;
    };
    const State2 psi = vec(x.theta, x.phi);
    const State2 d_th =
        (vec(x.theta + fd_step, x.phi) - vec(x.theta - fd_step, x.phi)) / (2.0 * fd_step);
    const State2 d_ph =
        (vec(x.theta, x.phi + fd_step) - vec(x.theta, x.phi - fd_step)) / (2.0 * fd_step);

    const Mat2 w = build_metric(x);
    const MField m = build_m(x);
    ComplexConnection c;
    c.f_theta = iu * (psi.dot(w * d_th) + psi.dot(w * m.m_theta * psi));
    c.f_phi = iu * (psi.dot(w * d_ph) + psi.dot(w * m.m_phi * psi));
    return c;
}

}  // namespace detail

/// Connection of either branch by numerical differentiation of the gauge-fixed
/// eigenvector. The imaginary parts must cancel between the two terms; a
/// residue above tol.reality signals an internal inconsistency.
inline ConnectionSample connection_numeric(const ParamPoint& x, Branch branch,
                                           const Tolerances& tol = {},
                                           const GaugeFn* gauge = nullptr) {
    const auto c = detail::connection_numeric_complex(x, branch, gauge, tol);
    const double imag = std::max(std::abs(c.f_theta.imag()), std::abs(c.f_phi.imag()));
    if (imag > tol.reality)
        throw consistency_error("connection_numeric: integrand not real (imag = " +
                                std::to_string(imag) + ") at " + x.describe());
    return ConnectionSample{c.f_theta.real(), c.f_phi.real()};
}

namespace detail {

/// Compensated (Kahan) accumulator; loop quadratures sum tens of thousands of
/// like-magnitude terms and plain summation roundoff would eat the 1e-12
/// contracts on exact cases.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

/// Composite Simpson over each polyline segment, panels split proportionally
/// to segment length. integrand(s, X, dX/ds) is sampled in normalized
/// arclength.
template <typename F>
double loop_quadrature_once(const LoopPath& path, const F& integrand, long total_panels) {
    if (path.zero_length()) return 0.0;
    const auto& verts = path.vertices();
    const double len = path.length();
    double cum = 0.0;
    KahanSum sum;
    for (std::size_t seg = 0; seg + 1 < verts.size(); ++seg) {
        const double dth = verts[seg + 1].first - verts[seg].first;
        const double dph = verts[seg + 1].second - verts[seg].second;
        const double seg_len = std::hypot(dth, dph);
        if (seg_len == 0.0) continue;
        const double s0 = cum / len;
        const double s1 = (cum + seg_len) / len;
        cum += seg_len;
        const long panels =
            std::max<long>(16, std::lround(static_cast<double>(total_panels) * seg_len / len));
        const double ds = s1 - s0;
        const TangentVector dxds{dth / ds, dph / ds};
        const double hs = ds / static_cast<double>(2 * panels);
        auto f = [&](double s) { return integrand(path.at(s), dxds); };
        KahanSum acc;
        acc.add(f(s0));
        acc.add(f(s1));
        for (long k = 1; k < 2 * panels; ++k)
            acc.add(f(s0 + hs * static_cast<double>(k)) * (k % 2 == 1 ? 4.0 : 2.0));
        sum.add(acc.sum * hs / 3.0);
    }
    return sum.sum;
}

/// Runs the quadrature at the requested resolution and at double resolution;
/// the refinement gap must close below tol.quadrature (relative).
template <typename F>
double loop_quadrature(const LoopPath& path, const F& integrand, long total_panels,
                       const Tolerances& tol) {
    const double coarse = loop_quadrature_once(path, integrand, total_panels);
    const double fine = loop_quadrature_once(path, integrand, 2 * total_panels);
    if (std::abs(fine - coarse) > tol.quadrature * std::max(1.0, std::abs(fine)))
        throw consistency_error("loop_quadrature: refinement gap " +
                                std::to_string(std::abs(fine - coarse)) +
                                " has not converged");
    return fine;
}

}  // namespace detail

inline constexpr long default_panels = 10000;

/// Loop integral of F_phi d(phi) + F_theta d(theta), mod 2pi. The analytic
/// route uses the + branch closed forms; the numeric route differentiates the
/// gauge-fixed eigenvector of the requested branch.
inline double line_integral(const LoopPath& path, bool use_analytic,
                            Branch branch = Branch::plus, long panels = default_panels,
                            const Tolerances& tol = {}) {
    if (use_analytic && branch != Branch::plus)
        throw std::invalid_argument("line_integral: closed forms exist for branch + only");
    path.check_nonsingular(branch, tol);
    auto integrand = [&](const ParamPoint& x, const TangentVector& dxds) {
        const ConnectionSample c = use_analytic ? connection_analytic(x, tol)
                                                : connection_numeric(x, branch, tol);
        return c.f_theta * dxds.d_theta + c.f_phi * dxds.d_phi;
    };
    return wrap_2pi(detail::loop_quadrature(path, integrand, panels, tol));
}

/// Omega = loop integral of (1 - cos(theta)) d(phi): the solid angle of the
/// cap bounded by the path that excludes the south pole, signed by orientation
/// and carrying 2pi per winding.
inline double solid_angle(const LoopPath& path, long panels = default_panels,
                          const Tolerances& tol = {}) {
    auto integrand = [&](const ParamPoint& x, const TangentVector& dxds) {
        return (1.0 - std::cos(x.theta)) * dxds.d_phi;
    };
    return detail::loop_quadrature(path, integrand, panels, tol);
}

/// Monopole-plus-string evaluation of the + branch loop phase. The string
/// carries (1 + U) pi per winding; the monopole charge is -U/2.
inline FluxDecomposition flux_formula(const LoopPath& path, const ParamPoint& x,
                                      long panels = default_panels,
                                      const Tolerances& tol = {}) {
    const double u = x.u_ratio();
    FluxDecomposition d;
    d.monopole_part = -(u / 2.0) * solid_angle(path, panels, tol);
    d.string_part = (1.0 + u) * pi * static_cast<double>(path.winding());
    d.total = wrap_2pi(d.monopole_part + d.string_part);
    return d;
}

/// One sample of the fictitious field on the unit sphere: the monopole term
/// -(U/2) r_hat, plus a flag marking the +z-axis string of weight (1 + U) pi.
struct BEffSample {
    Vec3 field;
    bool on_string;
    double string_weight;
};

inline BEffSample b_eff_sample(const Vec3& r_hat, double u) {
    if (std::abs(r_hat.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("b_eff_sample: r_hat must be a unit vector");
    const bool on_string = std::hypot(r_hat.x(), r_hat.y()) < 1e-12 && r_hat.z() > 0.0;
    return BEffSample{Vec3(-(u / 2.0) * r_hat), on_string, (1.0 + u) * pi};
}

/// Recomputes the numeric loop integral with the eigenvector gauge-rotated by
/// e^{i f}; returns |delta gamma| wrapped to [0, pi]. Single-valued f must
/// leave the loop phase unchanged.
inline double gauge_invariance_check(const LoopPath& path, const GaugeFn& f,
                                     Branch branch = Branch::plus,
                                     long panels = default_panels,
                                     const Tolerances& tol = {}) {
    path.check_nonsingular(branch, tol);
    auto run = [&](const GaugeFn* gauge) {
        auto integrand = [&](const ParamPoint& x, const TangentVector& dxds) {
            const ConnectionSample c = connection_numeric(x, branch, tol, gauge);
            return c.f_theta * dxds.d_theta + c.f_phi * dxds.d_phi;
        };
        return detail::loop_quadrature(path, integrand, panels, tol);
    };
    const double base = run(nullptr);
    const double gauged = run(&f);
    return std::abs(wrap_diff(gauged, base));
}

}  // namespace ptqm
