#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "cavcool/covariance.hpp"

using namespace cavcool;

namespace {

DerivedCouplings fig2a_couplings() {
    DerivedCouplings c;
    c.x = 0.25;
    c.y = 1.0;
    c.x_per_mode = {0.25};
    c.omega_eff = 0.25;
    return c;
}

Eigen::Matrix3cd random_hermitian(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::Matrix3cd a;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = Complex(g(rng), g(rng));
    return 0.5 * (a + a.adjoint());
}

}  // namespace

TEST_CASE("bosonic drift matrix") {
    SECTION("x = y = 0: only the cavity damping survives") {
        DerivedCouplings c;
        const Eigen::Matrix3cd k = bosonic_drift(c, 0.8);
        Eigen::Matrix3cd expected = Eigen::Matrix3cd::Zero();
        expected(2, 2) = -0.4;
        CHECK((k - expected).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("kappa = 0 makes K anti-Hermitian") {
        const Eigen::Matrix3cd k = bosonic_drift(fig2a_couplings(), 0.0);
        CHECK((k + k.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("normal-mode splitting: eigenvalues {0, +-i sqrt(x^2+y^2)} at kappa = 0") {
        const auto c = fig2a_couplings();
        const Eigen::Matrix3cd k = bosonic_drift(c, 0.0);
        Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(k);
        std::vector<double> mags;
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(es.eigenvalues()(i).real()) < 1e-14);
            mags.push_back(std::abs(es.eigenvalues()(i)));
        }
        std::sort(mags.begin(), mags.end());
        const double split = std::sqrt(c.x * c.x + c.y * c.y);
        CHECK(mags[0] < 1e-14);
        CHECK(mags[1] == Catch::Approx(split).epsilon(1e-12));
        CHECK(mags[2] == Catch::Approx(split).epsilon(1e-12));
    }
}

TEST_CASE("covariance propagation") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-13;
    cfg.record_stride = 0.5;

    SECTION("decoupled cavity mode decays as n0 e^{-kappa t}") {
        DerivedCouplings c;
        const Eigen::Matrix3cd k = bosonic_drift(c, 0.6);
        CovarianceState m0;
        m0.m(2, 2) = 5.0;
        const auto states = propagate_covariance(m0, k, 0.0, 10.0, cfg);
        for (const auto& st : states)
            CHECK(st.m(2, 2).real() ==
                  Catch::Approx(5.0 * std::exp(-0.6 * st.t)).epsilon(1e-7).margin(1e-10));
    }
    SECTION("kappa = 0 conserves the total excitation number (trace)") {
        const Eigen::Matrix3cd k = bosonic_drift(fig2a_couplings(), 0.0);
        CovarianceState m0;
        m0.m(1, 1) = 3.0;
        const auto states = propagate_covariance(m0, k, 0.0, 20.0, cfg);
        for (const auto& st : states)
            CHECK(st.m.trace().real() == Catch::Approx(3.0).epsilon(1e-8));
    }
    SECTION("integration matches the closed-form matrix exponential") {
        const Eigen::Matrix3cd k = bosonic_drift(fig2a_couplings(), 1.0);
        CovarianceState m0;
        m0.m(1, 1) = 1000.0;
        const auto states = propagate_covariance(m0, k, 0.0, 30.0, cfg);
        for (const auto& st : states) {
            const Eigen::Matrix3cd closed = covariance_closed_form(m0.m, k, st.t);
            CHECK((st.m - closed).cwiseAbs().maxCoeff() / 1000.0 < 1e-8);
        }
    }
    SECTION("hermiticity is preserved along the flow") {
        const Eigen::Matrix3cd k = bosonic_drift(fig2a_couplings(), 1.0);
        std::mt19937_64 rng(5150);
        CovarianceState m0;
        m0.m = random_hermitian(rng);
        const auto states = propagate_covariance(m0, k, 0.0, 5.0, cfg);
        for (const auto& st : states)
            CHECK((st.m - st.m.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("non-Hermitian input is rejected") {
        CovarianceState m0;
        m0.m(0, 1) = Complex(1.0, 0.0);  // no conjugate partner
        const Eigen::Matrix3cd k = bosonic_drift(fig2a_couplings(), 1.0);
        CHECK_THROWS_AS(propagate_covariance(m0, k, 0.0, 1.0, cfg), std::invalid_argument);
    }
}

TEST_CASE("covariance moment extraction") {
    SECTION("zero matrix is the vacuum") {
        CovarianceState m0;
        const MomentState s = covariance_to_moments(m0, 6);
        CHECK(s.m == 0.0);
        CHECK(s.n == 0.0);
        CHECK(s.s3 == -3.0);
        CHECK(s.u1 == 0.0);
        CHECK(s.k3 == 0.0);
    }
    SECTION("M_Sb = i/2 gives u1 = -1") {
        CovarianceState m0;
        m0.m(0, 1) = Complex(0.0, 0.5);
        m0.m(1, 0) = Complex(0.0, -0.5);
        CHECK(covariance_to_moments(m0, 2).u1 == -1.0);
    }
    SECTION("adiabatic fixed point round-trips through the embedding") {
        DerivedCouplings c = fig2a_couplings();
        const MomentState fp = adiabatic_fixed_point(1000.0, c, 1'000'000);
        const CovarianceState m = moments_to_covariance(fp, 1'000'000);
        const MomentState back = covariance_to_moments(m, 1'000'000);
        CHECK(back.m == fp.m);
        CHECK(back.n == fp.n);
        CHECK(back.s3 == fp.s3);
        CHECK(back.u1 == fp.u1);
        CHECK(back.u2 == fp.u2);
        CHECK(back.k3 == fp.k3);
    }
}

// The covariance flow and the clamped moment equations describe the same
// linear model except for the collective-excitation feedback the moment
// closure drops: the u-velocity difference is exactly (2x M_SS, 2y M_SS).
TEST_CASE("clamped moment equations differ from the covariance flow by the M_SS feedback") {
    const auto c = fig2a_couplings();
    PhysicalParams p;
    p.n_particles = 1'000'000;
    p.g = 1e-3;
    p.kappa = 1.0;
    p.eta = 0.1;
    p.rabi = {5e-3};
    p.trap_freqs = {0.1};
    const Eigen::Matrix3cd k = bosonic_drift(c, p.kappa);
    const Eigen::Matrix3cd kc = k.conjugate();
    std::mt19937_64 rng(31337);

    for (int iter = 0; iter < 200; ++iter) {
        Eigen::Matrix3cd m = random_hermitian(rng);
        m *= 100.0;
        const Eigen::Matrix3cd mdot = kc * m + m * k.transpose();

        MomentState s = covariance_to_moments({m, 0.0}, p.n_particles);
        s.s3 = -0.5e6;  // clamp convention: coefficients see s3 = -N/2
        const MomentState ode = rhs_common(s, c, p, true);

        const MomentState cov = covariance_to_moments({mdot, 0.0}, 0);  // derivatives
        const double mss = m(0, 0).real();
        const double scale = 100.0;
        CHECK(std::abs(cov.m - ode.m) < 1e-10 * scale);
        CHECK(std::abs((cov.s3 + 0.0) - (-(c.x * s.u1 + c.y * s.u2))) < 1e-10 * scale);
        CHECK(std::abs(cov.k3 - ode.k3) < 1e-10 * scale);
        CHECK(std::abs(cov.n - ode.n) < 1e-10 * scale);
        CHECK(std::abs((cov.u1 - ode.u1) - 2.0 * c.x * mss) < 1e-10 * scale);
        CHECK(std::abs((cov.u2 - ode.u2) - 2.0 * c.y * mss) < 1e-10 * scale);
    }
}

TEST_CASE("slow decay rate of the fig2a covariance flow") {
    // root of det(K - lambda) = 0 closest to zero; frozen from the cubic
    // lambda^3 + (kappa/2) lambda^2 + (x^2+y^2) lambda + (kappa/2) x^2 = 0
    const Eigen::Matrix3cd k = bosonic_drift(fig2a_couplings(), 1.0);
    CHECK(covariance_slow_rate(k) == Catch::Approx(0.059609767419394).epsilon(1e-10));
}
