#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include "ptqm/ptqm.hpp"
#include "support/test_support.hpp"

using namespace ptqm;
using Catch::Matchers::WithinAbs;

TEST_CASE("ParamPoint enforces the unbroken-phase constraints", "[pt_model]") {
    CHECK_THROWS_AS(ParamPoint(0, 1, 1, 0, 0, 0), std::invalid_argument);   // b = a
    CHECK_THROWS_AS(ParamPoint(0, 1, 1.5, 0, 0, 0), std::invalid_argument); // b > a
    CHECK_THROWS_AS(ParamPoint(0, 0, 0, 0, 0, 0), std::invalid_argument);   // a = 0
    CHECK_NOTHROW(ParamPoint(0, -1, 0.5, 0, 0, 0));                          // a < 0 allowed

    const ParamPoint clamped(0, 1, 0, 4.0, 7.0, -3.0);
    CHECK(clamped.theta == pi);       // theta clamped into [0, pi]
    CHECK(clamped.phi == 7.0);        // phi, delta stored unwrapped
    CHECK(clamped.delta == -3.0);
}

TEST_CASE("build_parity returns the axis Pauli projection", "[pt_model]") {
    Mat2 sz, sx, sy;
    sz << 1, 0, 0, -1;
    sx << 0, 1, 1, 0;
    sy << 0, -iu, iu, 0;
    CHECK(max_abs(build_parity(0, 0) - sz) < 1e-15);
    CHECK(max_abs(build_parity(pi / 2, 0) - sx) < 1e-15);
    CHECK(max_abs(build_parity(pi / 2, pi / 2) - sy) < 1e-15);

    auto gen = testing::rng(11);
    std::uniform_real_distribution<double> th(0, pi), ph(-2 * pi, 2 * pi);
    for (int i = 0; i < 200; ++i) {
        const Mat2 p = build_parity(th(gen), ph(gen));
        CHECK(hermiticity_defect(p) < 1e-15);
        CHECK(max_abs(p * p - Mat2::Identity()) < 1e-15);
        CHECK(std::abs(p.trace()) < 1e-15);
    }
}

TEST_CASE("build_hamiltonian matches the closed forms", "[pt_model]") {
    Mat2 sx;
    sx << 0, 1, 1, 0;
    CHECK(max_abs(build_hamiltonian(ParamPoint(0, 1, 0, pi / 2, 0, 0)) - sx) < 1e-15);

    Mat2 expected;
    expected << -0.5 * iu, 1.0, 1.0, 0.5 * iu;
    CHECK(max_abs(build_hamiltonian(ParamPoint(0, 1, 0.5, pi / 2, 0, 0)) - expected) < 1e-15);

    Mat2 diag;
    diag << 3, 0, 0, 1;
    CHECK(max_abs(build_hamiltonian(ParamPoint(2, 1, 0, 0, 0, 0)) - diag) < 1e-15);
}

TEST_CASE("hamiltonian spectrum is real with splitting 2 sqrt(a^2-b^2)", "[pt_model]") {
    auto gen = testing::rng(12);
    for (int i = 0; i < 500; ++i) {
        const ParamPoint x = testing::random_param(gen);
        const Mat2 h = build_hamiltonian(x);
        CHECK(std::abs(h.trace() - 2.0 * x.epsilon) < 1e-12 * std::max(1.0, std::abs(x.epsilon)));

        Eigen::ComplexEigenSolver<Mat2> es(h);  // generic dense solver as oracle
        const auto ev = es.eigenvalues();
        const double scale = std::max(1.0, max_abs(h));
        CHECK(std::abs(ev(0).imag()) < 1e-12 * scale);
        CHECK(std::abs(ev(1).imag()) < 1e-12 * scale);
        const double split = std::abs(ev(0).real() - ev(1).real());
        CHECK_THAT(split, WithinAbs(2.0 * x.splitting_half(), 1e-10 * scale));
    }
}

TEST_CASE("build_metric structure", "[pt_model]") {
    CHECK(max_abs(build_metric(ParamPoint(0, 1, 0, pi / 2, 0, 0)) - Mat2::Identity()) < 1e-15);

    // beta = -0.5 e_phi = (0, -0.5, 0) at theta=pi/2, phi=0, delta=0
    const Mat2 w = build_metric(ParamPoint(0, 1, 0.5, pi / 2, 0, 0));
    const double c = 2.0 / std::sqrt(3.0);
    CHECK_THAT(w(0, 0).real(), WithinAbs(c, 1e-14));
    CHECK_THAT(w(1, 1).real(), WithinAbs(c, 1e-14));
    CHECK_THAT(w(0, 1).imag(), WithinAbs(1.0 / std::sqrt(3.0), 1e-14));
    CHECK_THAT(w(0, 1).real(), WithinAbs(0.0, 1e-14));

    auto gen = testing::rng(13);
    for (int i = 0; i < 500; ++i) {
        const Mat2 wi = build_metric(testing::random_param(gen));
        CHECK(hermiticity_defect(wi) < 1e-14 * max_abs(wi));
        CHECK_THAT(wi.determinant().real(), WithinAbs(1.0, 1e-11 * max_abs(wi)));
        CHECK(wi.trace().real() > 0.0);
    }
}

TEST_CASE("eigensystem energies, gauge and W-orthonormality", "[pt_model]") {
    SECTION("sigma_x point") {
        const EigSystem eig = eigensystem(ParamPoint(0, 1, 0, pi / 2, 0, 0));
        CHECK_THAT(eig.e_plus, WithinAbs(1.0, 1e-15));
        CHECK_THAT(eig.e_minus, WithinAbs(-1.0, 1e-15));
        const State2 expected(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
        CHECK((eig.psi_plus - expected).cwiseAbs().maxCoeff() < 1e-14);
    }

    SECTION("non-Hermitian point") {
        const EigSystem eig = eigensystem(ParamPoint(0, 1, 0.5, pi / 2, 0, 0));
        CHECK_THAT(eig.e_plus, WithinAbs(std::sqrt(0.75), 1e-14));
        CHECK_THAT(eig.e_minus, WithinAbs(-std::sqrt(0.75), 1e-14));
        CHECK_THAT(eig.u, WithinAbs(std::sqrt(0.75), 1e-15));
    }

    SECTION("splitting independent of angles") {
        auto gen = testing::rng(14);
        std::uniform_real_distribution<double> th(0.2, pi - 0.2), ang(-2 * pi, 2 * pi);
        for (int i = 0; i < 50; ++i) {
            const EigSystem eig = eigensystem(ParamPoint(5, 2, 1, th(gen), ang(gen), ang(gen)));
            CHECK_THAT(eig.e_plus - eig.e_minus, WithinAbs(2.0 * std::sqrt(3.0), 1e-13));
        }
    }

    SECTION("eigen-equation and W-orthonormality on random draws") {
        auto gen = testing::rng(15);
        for (int i = 0; i < 500; ++i) {
            const ParamPoint x = testing::random_regular_param(gen);
            const EigSystem eig = eigensystem(x);
            const Mat2 h = build_hamiltonian(x);
            const Mat2 w = build_metric(x);
            const double scale = std::max(1.0, max_abs(h));
            CHECK((h * eig.psi_plus - eig.e_plus * eig.psi_plus).cwiseAbs().maxCoeff() <
                  1e-10 * scale);
            CHECK((h * eig.psi_minus - eig.e_minus * eig.psi_minus).cwiseAbs().maxCoeff() <
                  1e-10 * scale);
            CHECK(std::abs(inner_w(w, eig.psi_plus, eig.psi_minus)) < 1e-10);
            CHECK_THAT(inner_w(w, eig.psi_plus, eig.psi_plus).real(), WithinAbs(1.0, 1e-10));
            CHECK_THAT(inner_w(w, eig.psi_minus, eig.psi_minus).real(), WithinAbs(1.0, 1e-10));
            CHECK(std::abs(eig.u) <= 1.0);
            CHECK(std::signbit(eig.u) == std::signbit(x.a));
        }
    }

    SECTION("gauge singular point fails loudly") {
        CHECK_THROWS_AS(eigensystem(ParamPoint(0, 1, 0, 0, 0, 0)), gauge_singular_error);
        CHECK_THROWS_AS(eigensystem(ParamPoint(0, 1, 0, pi, 0, 0)), gauge_singular_error);
        // one branch can still be evaluated alone
        CHECK_NOTHROW(branch_eigenvector(ParamPoint(0, 1, 0, pi, 0, 0), Branch::plus));
        CHECK_THROWS_AS(branch_eigenvector(ParamPoint(0, 1, 0, pi, 0, 0), Branch::minus),
                        gauge_singular_error);
    }

    SECTION("b = 0 reduces to spin-1/2 coherent states") {
        auto gen = testing::rng(16);
        std::uniform_real_distribution<double> th(0.05, pi - 0.05), ph(-2 * pi, 2 * pi);
        for (int i = 0; i < 200; ++i) {
            const double theta = th(gen), phi = ph(gen);
            const EigSystem eig = eigensystem(ParamPoint(0, 1.7, 0, theta, phi, 0.4));
            const cplx e = std::exp(-iu * phi);
            const State2 plus(e * std::cos(theta / 2), std::sin(theta / 2));
            const State2 minus(e * std::sin(theta / 2), -std::cos(theta / 2));
            CHECK((eig.psi_plus - plus).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((eig.psi_minus - minus).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("verify_pseudo_hermiticity", "[pt_model]") {
    CHECK(verify_pseudo_hermiticity(ParamPoint(0, 1, 0, pi / 4, 1, 0)) < 1e-15);
    CHECK(verify_pseudo_hermiticity(ParamPoint(0, 1, 0.5, pi / 2, 0, 0)) < 1e-15);

    auto gen = testing::rng(17);
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i)
        worst = std::max(worst, verify_pseudo_hermiticity(testing::random_param(gen)));
    CHECK(worst < 1e-12);
}

TEST_CASE("inner_w", "[pt_model]") {
    const State2 e0(1, 0);
    CHECK_THAT(inner_w(Mat2::Identity(), e0, e0).real(), WithinAbs(1.0, 1e-15));

    const Mat2 w = build_metric(ParamPoint(0, 1, 0.5, pi / 2, 0, 0));
    CHECK_THAT(inner_w(w, e0, e0).real(), WithinAbs(2.0 / std::sqrt(3.0), 1e-14));

    SECTION("sesquilinearity") {
        auto gen = testing::rng(18);
        std::uniform_real_distribution<double> u(-1, 1);
        const State2 f(cplx(u(gen), u(gen)), cplx(u(gen), u(gen)));
        const State2 g(cplx(u(gen), u(gen)), cplx(u(gen), u(gen)));
        const cplx alpha(0.3, -1.1);
        CHECK(std::abs(inner_w(w, f, alpha * g) - alpha * inner_w(w, f, g)) < 1e-14);
        CHECK(std::abs(inner_w(w, alpha * f, g) - std::conj(alpha) * inner_w(w, f, g)) < 1e-14);
        CHECK(inner_w(w, f, f).real() > 0.0);
    }

    SECTION("rejects bad metrics") {
        Mat2 sz, nh;
        sz << 1, 0, 0, -1;               // indefinite
        nh << 1, 1, 0, 1;                // not Hermitian
        CHECK_THROWS_AS(inner_w(sz, e0, e0), std::invalid_argument);
        CHECK_THROWS_AS(inner_w(nh, e0, e0), std::invalid_argument);
        CHECK_THROWS_AS(inner_w(Mat2(-Mat2::Identity()), e0, e0), std::invalid_argument);
    }
}

TEST_CASE("eigenvector_gradient matches finite differences", "[pt_model]") {
    auto gen = testing::rng(19);
    const double h = 1e-6;
    for (int i = 0; i < 200; ++i) {
        const ParamPoint x = testing::random_regular_param(gen, 1e-2);
        for (Branch br : {Branch::plus, Branch::minus}) {
            const EigVectorGradient g = eigenvector_gradient(x, br);
            const State2 fd_th = (detail::gauge_eigenvector_at(x, x.theta + h, x.phi, br) -
                                  detail::gauge_eigenvector_at(x, x.theta - h, x.phi, br)) /
                                 (2 * h);
            const State2 fd_ph = (detail::gauge_eigenvector_at(x, x.theta, x.phi + h, br) -
                                  detail::gauge_eigenvector_at(x, x.theta, x.phi - h, br)) /
                                 (2 * h);
            CHECK((g.d_theta - fd_th).cwiseAbs().maxCoeff() < 1e-6);
            CHECK((g.d_phi - fd_ph).cwiseAbs().maxCoeff() < 1e-6);
        }
    }
}
