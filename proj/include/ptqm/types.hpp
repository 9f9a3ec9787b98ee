#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <cmath>

#include <Eigen/Dense>

namespace ptqm {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using State2 = Eigen::Vector2cd;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cplx iu{0.0, 1.0};

/// Eigenvalue branch of the two-level system.
enum class Branch { plus, minus };

inline const char* to_string(Branch b) { return b == Branch::plus ? "+" : "-"; }

/// Thrown where an eigenvector normalization collapses (gauge patch breaks down).
struct gauge_singular_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when two internal computation routes disagree beyond tolerance.
struct consistency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Central tolerance record; every numerical contract reads from one of these.
struct Tolerances {
    double structural = 1e-12;  // algebraic identities (pseudo-Hermiticity, det W = 1, eta^2 = W)
    double eigen = 1e-10;       // eigen contracts, W-orthonormality
    double gauge_cut = 1e-8;    // relative N^2 cutoff below which a point counts as gauge singular
    double reality = 1e-6;      // allowed imaginary residue of the connection integrand
    double quadrature = 1e-8;   // relative refinement gap accepted by loop quadrature
    double phase = 1e-3;        // evolved vs analytic geometric phase
    double drift = 1e-9;        // W-unitarity drift budget
};

/// The six real parameters (epsilon, a, b, theta, phi, delta) of the model family.
///
/// Constraints a != 0 and a^2 > b^2 (unbroken phase, non-degenerate real spectrum)
/// are enforced at construction; theta is clamped to [0, pi] while phi and delta
/// are stored as given so path winding numbers stay well defined.
struct ParamPoint {
    double epsilon = 0.0;
    double a = 1.0;
    double b = 0.0;
    double theta = 0.0;
    double phi = 0.0;
    double delta = 0.0;

    ParamPoint() = default;

    ParamPoint(double epsilon_, double a_, double b_, double theta_, double phi_, double delta_)
        : epsilon(epsilon_), a(a_), b(b_), theta(theta_), phi(phi_), delta(delta_) {
        if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(epsilon) &&
              std::isfinite(theta) && std::isfinite(phi) && std::isfinite(delta)))
            throw std::invalid_argument("ParamPoint: non-finite parameter");
        if (a == 0.0)
            throw std::invalid_argument("ParamPoint: a must be nonzero");
        if (!(a * a > b * b))
            throw std::invalid_argument("ParamPoint: requires a^2 > b^2 (got a=" +
                                        std::to_string(a) + ", b=" + std::to_string(b) + ")");
        if (theta < 0.0) theta = 0.0;
        if (theta > pi) theta = pi;
    }

    /// Same model parameters, relocated to (theta, phi).
    ParamPoint at_angles(double theta_, double phi_) const {
        return ParamPoint(epsilon, a, b, theta_, phi_, delta);
    }

    /// sqrt(a^2 - b^2): half the level splitting.
    double splitting_half() const {
        return b == 0.0 ? std::abs(a) : std::sqrt(a * a - b * b);
    }

    /// U = sqrt(a^2 - b^2)/a, in [-1,0) or (0,1] following the sign of a.
    double u_ratio() const { return splitting_half() / a; }

    std::string describe() const {
        return "(eps=" + std::to_string(epsilon) + ", a=" + std::to_string(a) +
               ", b=" + std::to_string(b) + ", theta=" + std::to_string(theta) +
               ", phi=" + std::to_string(phi) + ", delta=" + std::to_string(delta) + ")";
    }
};

/// v . sigma for a complex 3-vector v.
inline Mat2 pauli_dot(const CVec3& v) {
    Mat2 m;
    m << v.z(), v.x() - iu * v.y(),
         v.x() + iu * v.y(), -v.z();
    return m;
}

inline Mat2 pauli_dot(const Vec3& v) { return pauli_dot(CVec3(v.cast<cplx>())); }

/// Local spherical frame at (theta, phi).
struct Frame {
    Vec3 e_r;
    Vec3 e_theta;
    Vec3 e_phi;
};

inline Frame frame_at(double theta, double phi) {
    const double st = std::sin(theta), ct = std::cos(theta);
    const double sp = std::sin(phi), cp = std::cos(phi);
    return Frame{Vec3(st * cp, st * sp, ct),
                 Vec3(ct * cp, ct * sp, -st),
                 Vec3(-sp, cp, 0.0)};
}

/// Wrap an angle into [0, 2*pi).
inline double wrap_2pi(double x) {
    double y = std::fmod(x, 2.0 * pi);
    if (y < 0.0) y += 2.0 * pi;
    if (y == 2.0 * pi) y = 0.0;
    return y;
}

/// Signed distance between two angles, in (-pi, pi].
inline double wrap_diff(double x, double y) {
    double d = std::remainder(x - y, 2.0 * pi);
    return d;
}

/// Max-entry norm of a 2x2 complex matrix.
inline double max_abs(const Mat2& m) { return m.cwiseAbs().maxCoeff(); }

/// Hermiticity defect ||A - A^dagger|| (max entry).
inline double hermiticity_defect(const Mat2& m) { return max_abs(m - Mat2(m.adjoint())); }

}  // namespace ptqm
