#pragma once

#include <cmath>

#include <Eigen/Eigenvalues>

#include "ptqm/pt_model.hpp"
#include "ptqm/types.hpp"

namespace ptqm {

/// Velocity d(theta, phi)/dt on the navigation manifold.
struct TangentVector {
    double d_theta = 0.0;
    double d_phi = 0.0;
};

/// The two components of the Hermitian velocity-coupling field M along the
/// theta and phi parameter directions.
struct MField {
    Mat2 m_theta;
    Mat2 m_phi;
};

namespace detail {

/// Closed-form partials of beta(X) on the (theta, phi) manifold:
///   d beta/d theta = -(b/a) sin(delta) e_r
///   d beta/d phi   =  (b/a) [cos(delta) sin(theta) e_r
///                            + cos(delta) cos(theta) e_theta
///                            + sin(delta) cos(theta) e_phi]
struct BetaGradient {
    Vec3 d_theta;
    Vec3 d_phi;
};

inline BetaGradient beta_gradient(const ParamPoint& x) {
    const Frame f = frame_at(x.theta, x.phi);
    const double r = x.b / x.a;
    const double st = std::sin(x.theta), ct = std::cos(x.theta);
    const double cd = std::cos(x.delta), sd = std::sin(x.delta);
    BetaGradient g;
    g.d_theta = -r * sd * f.e_r;
    g.d_phi = r * (cd * st * f.e_r + cd * ct * f.e_theta + sd * ct * f.e_phi);
    return g;
}

}  // namespace detail

/// M(X) = (1/2) grad(beta) . sigma, the Hermitian solution of
/// grad W = M W + W M on the (theta, phi) manifold.
inline MField build_m(const ParamPoint& x) {
    const auto g = detail::beta_gradient(x);
    return MField{0.5 * pauli_dot(g.d_theta), 0.5 * pauli_dot(g.d_phi)};
}

/// K(X, v) = M . dX/dt. Hermitian, vanishes with the velocity.
inline Mat2 build_k(const ParamPoint& x, const TangentVector& v) {
    const MField m = build_m(x);
    return v.d_theta * m.m_theta + v.d_phi * m.m_phi;
}

/// Full evolution generator Lambda = H(X) - i K(X, v).
inline Mat2 build_lambda(const ParamPoint& x, const TangentVector& v) {
    return build_hamiltonian(x) - iu * build_k(x, v);
}

/// Analytic grad W on the (theta, phi) manifold: the scalar prefactor of W is
/// constant there, so grad W = (|a|/sqrt(a^2-b^2)) grad(beta) . sigma.
struct MetricGradient {
    Mat2 d_theta;
    Mat2 d_phi;
};

inline MetricGradient metric_gradient(const ParamPoint& x) {
    const double c = std::abs(x.a) / x.splitting_half();
    const auto g = detail::beta_gradient(x);
    return MetricGradient{c * pauli_dot(g.d_theta), c * pauli_dot(g.d_phi)};
}

/// Solves grad_component = M W + W M for the unique Hermitian M, given a
/// Hermitian positive definite W of any dimension. Works in W's eigenbasis,
/// where M_ij = G_ij / (w_i + w_j); positive eigenvalues keep every
/// denominator nonzero.
inline Eigen::MatrixXcd solve_metric_equation(const Eigen::MatrixXcd& w,
                                              const Eigen::MatrixXcd& grad_component,
                                              const Tolerances& tol = {}) {
    if (w.rows() != w.cols() || grad_component.rows() != grad_component.cols() ||
        w.rows() != grad_component.rows())
        throw std::invalid_argument("solve_metric_equation: dimension mismatch");
    const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
    if ((w - w.adjoint()).cwiseAbs().maxCoeff() > tol.structural * scale)
        throw std::invalid_argument("solve_metric_equation: W is not Hermitian");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("solve_metric_equation: eigendecomposition failed");
    const Eigen::VectorXd evals = es.eigenvalues();
    if (evals.minCoeff() <= 0.0)
        throw std::invalid_argument("solve_metric_equation: W is not positive definite");

    const Eigen::MatrixXcd& v = es.eigenvectors();
    Eigen::MatrixXcd g = v.adjoint() * grad_component * v;
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            g(i, j) /= evals(i) + evals(j);
    return v * g * v.adjoint();
}

}  // namespace ptqm
