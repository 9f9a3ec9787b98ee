#include <catch2/catch_amalgamated.hpp>

#include "ptqm/ptqm.hpp"
#include "support/test_support.hpp"

using namespace ptqm;
using Catch::Matchers::WithinAbs;

namespace {
const ParamPoint ref_base(0, 1, 0.5, pi / 3, 0, 0);
const double ref_gamma = pi * (1 + std::sqrt(0.75) * 0.5);
}  // namespace

TEST_CASE("EvolutionConfig validation and the step-resolution guard", "[evolution]") {
    CHECK_THROWS_AS((EvolutionConfig{0.0, 1000}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((EvolutionConfig{1.0, 99}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((EvolutionConfig{1.0, 1000, Branch::plus, 0}).validate(),
                    std::invalid_argument);

    // steps < 10 max|E| T / pi is rejected
    const LoopPath lat = LoopPath::latitude(ref_base, pi / 3);
    const State2 psi = eigensystem(lat.at(0.0)).psi_plus;
    CHECK_THROWS_AS(integrate(lat, EvolutionConfig{1000.0, 500}, psi), std::invalid_argument);
    CHECK_NOTHROW(integrate(lat, EvolutionConfig{1000.0, 50000, Branch::plus, 500}, psi));
}

TEST_CASE("stationary eigenstate acquires exactly the dynamical phase", "[evolution]") {
    const ParamPoint x(0, 1, 0, pi / 2, 0, 0);
    const LoopPath still = LoopPath::custom(x, {{pi / 2, 0.0}});
    const EigSystem eig = eigensystem(x);
    const EvolutionConfig cfg{1.0, 1000, Branch::plus, 100};
    const Trajectory traj = integrate(still, cfg, eig.psi_plus);
    const State2 expected = std::exp(-iu * 1.0) * eig.psi_plus;
    CHECK((traj.states.back() - expected).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(unitarity_drift(traj) < 1e-12);
}

TEST_CASE("trajectory recording", "[evolution]") {
    const LoopPath lat = LoopPath::latitude(ref_base, pi / 3);
    const State2 psi = eigensystem(lat.at(0.0)).psi_plus;
    const EvolutionConfig cfg{100.0, 1000, Branch::plus, 100};
    const Trajectory traj = integrate(lat, cfg, psi);
    REQUIRE(traj.times.size() == 11);  // t = 0 plus every 100th step
    CHECK(traj.times.front() == 0.0);
    CHECK_THAT(traj.times.back(), WithinAbs(100.0, 1e-12));
    CHECK(traj.states.size() == traj.times.size());
    CHECK(traj.params.size() == traj.times.size());
    CHECK_THAT(traj.params.back().second, WithinAbs(2 * pi, 1e-9));
}

TEST_CASE("W-unitarity drift and its 4th-order step scaling", "[evolution]") {
    const LoopPath lat = LoopPath::latitude(ref_base, pi / 3);
    const State2 psi = eigensystem(lat.at(0.0)).psi_plus;

    const Trajectory coarse = integrate(lat, EvolutionConfig{200.0, 32000, Branch::plus, 80}, psi);
    const double d_coarse = unitarity_drift(coarse);
    CHECK(d_coarse < 1e-9);

    const Trajectory fine = integrate(lat, EvolutionConfig{200.0, 64000, Branch::plus, 160}, psi);
    const double d_fine = unitarity_drift(fine);
    const double ratio = d_coarse / d_fine;
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
}

TEST_CASE("extract_phases on the reference latitude loop", "[evolution]") {
    const LoopPath lat = LoopPath::latitude(ref_base, pi / 3);
    const State2 psi = eigensystem(lat.at(0.0)).psi_plus;

    const EvolutionConfig cfg{1000.0, 200000, Branch::plus, 2000};
    const Trajectory traj = integrate(lat, cfg, psi);
    PhaseReport rep = extract_phases(traj, lat, cfg);
    attach_analytic_phase(rep, ref_gamma);

    CHECK_THAT(rep.dynamical_phase, WithinAbs(-std::sqrt(0.75) * 1000.0, 1e-9));
    CHECK_THAT(wrap_2pi(rep.total_phase - rep.dynamical_phase),
               WithinAbs(rep.geometric_phase, 1e-12));
    CHECK(rep.residual < 5e-3);
    CHECK(rep.final_transition_prob < 1e-5);
    CHECK(rep.unitarity_drift < 1e-9);

    SECTION("discrepancy decreases with slower traversal") {
        const EvolutionConfig cfg2{2000.0, 100000, Branch::plus, 1000};
        PhaseReport rep2 = extract_phases(integrate(lat, cfg2, psi), lat, cfg2);
        attach_analytic_phase(rep2, ref_gamma);
        CHECK(rep2.residual < rep.residual);
    }
}

TEST_CASE("Hermitian limit: equatorial loop gives the standard -Omega/2", "[evolution]") {
    const ParamPoint base(0, 1, 0, pi / 2, 0, 0);
    const LoopPath eq = LoopPath::latitude(base, pi / 2);
    const State2 psi = eigensystem(eq.at(0.0)).psi_plus;
    const EvolutionConfig cfg{10000.0, 500000, Branch::plus, 5000};
    const PhaseReport rep = extract_phases(integrate(eq, cfg, psi), eq, cfg);
    CHECK_THAT(rep.geometric_phase, WithinAbs(pi, 1e-3));
}

TEST_CASE("minus branch evolves consistently", "[evolution]") {
    const LoopPath lat = LoopPath::latitude(ref_base, pi / 3);
    const EigSystem eig = eigensystem(lat.at(0.0));
    const EvolutionConfig cfg{1000.0, 50000, Branch::minus, 500};
    const Trajectory traj = integrate(lat, cfg, eig.psi_minus);
    const PhaseReport rep = extract_phases(traj, lat, cfg);
    const double gamma_minus =
        line_integral(lat, false, Branch::minus);  // no closed form for this branch
    CHECK(std::abs(wrap_diff(rep.geometric_phase, gamma_minus)) < 5e-3);
}

TEST_CASE("total phase is independent of the eigenvector's global phase", "[evolution]") {
    // rotating the stored convention rotates initial state and reference alike,
    // so the closed-loop overlap phase cannot move
    const LoopPath lat = LoopPath::latitude(ref_base, pi / 3);
    const ParamPoint x0 = lat.at(0.0);
    const EigSystem eig = eigensystem(x0);
    const Mat2 w0 = build_metric(x0);
    const EvolutionConfig cfg{200.0, 10000, Branch::plus, 100};

    const Trajectory plain = integrate(lat, cfg, eig.psi_plus);
    const double phase_plain = std::arg(inner_w(w0, eig.psi_plus, plain.states.back()));

    const cplx rot = std::exp(iu * 1.234);
    const Trajectory rotated = integrate(lat, cfg, State2(rot * eig.psi_plus));
    const double phase_rotated =
        std::arg(inner_w(w0, State2(rot * eig.psi_plus), rotated.states.back()));

    CHECK(std::abs(wrap_diff(phase_plain, phase_rotated)) < 1e-12);
}

TEST_CASE("non-adiabatic runs fail loudly", "[evolution]") {
    const ParamPoint base(0, 1, 0, pi / 4, 0, 0);
    const LoopPath fast = LoopPath::latitude(base, pi / 4, 2);
    const State2 psi = eigensystem(fast.at(0.0)).psi_plus;
    const EvolutionConfig cfg{4.5, 2000, Branch::plus, 10};
    const Trajectory traj = integrate(fast, cfg, psi);
    CHECK_THROWS_WITH(extract_phases(traj, fast, cfg),
                      Catch::Matchers::ContainsSubstring("non-adiabatic"));
}

TEST_CASE("adiabaticity diagnostics", "[evolution]") {
    SECTION("vanish with the velocity") {
        const auto d = adiabaticity_diagnostics(ref_base, TangentVector{0, 0});
        CHECK(d.g_plus == cplx(0, 0));
        CHECK(d.t_plus_minus == cplx(0, 0));
    }

    SECTION("Hermitian limit reproduces the Berry connection term") {
        auto gen = testing::rng(41);
        std::uniform_real_distribution<double> th(0.3, pi - 0.3), ph(-pi, pi);
        for (int i = 0; i < 50; ++i) {
            const double theta = th(gen);
            const double dphi = 1.6;
            const auto d = adiabaticity_diagnostics(ParamPoint(0, 1, 0, theta, ph(gen), 0),
                                                    TangentVector{0, dphi});
            CHECK_THAT(d.g_plus.real(), WithinAbs(0.0, 1e-12));
            CHECK_THAT(d.g_plus.imag(), WithinAbs(-0.5 * (1 + std::cos(theta)) * dphi, 1e-10));
        }
    }

    SECTION("leakage term is velocity-linear") {
        const TangentVector v{0.4, 1.1};
        const auto d1 = adiabaticity_diagnostics(ref_base, v);
        const auto d2 = adiabaticity_diagnostics(ref_base, TangentVector{2 * v.d_theta, 2 * v.d_phi});
        CHECK(std::abs(d2.t_plus_minus - 2.0 * d1.t_plus_minus) < 1e-14);
        CHECK(std::abs(d2.g_plus - 2.0 * d1.g_plus) < 1e-14);
    }

    SECTION("gauge-singular point is rejected") {
        CHECK_THROWS_AS(adiabaticity_diagnostics(ParamPoint(0, 1, 0, 0, 0, 0), TangentVector{0, 1}),
                        gauge_singular_error);
    }

    SECTION("reference-loop coupling strength") {
        // |t_phi| = 3/8 here; it sets the secular finite-T phase correction
        const auto d = adiabaticity_diagnostics(ref_base, TangentVector{0, 1});
        CHECK_THAT(std::abs(d.t_plus_minus), WithinAbs(0.375, 1e-9));
    }
}
