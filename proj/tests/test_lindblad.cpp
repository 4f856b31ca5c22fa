#include <catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "cavcool/analysis.hpp"
#include "cavcool/lindblad.hpp"

using namespace cavcool;

namespace {

DerivedCouplings couplings(double x, double y) {
    DerivedCouplings c;
    c.x = x;
    c.y = y;
    c.x_per_mode = {x};
    c.omega_eff = x;
    return c;
}

Matrix random_density(long long dim, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix a(dim, dim);
    for (long long i = 0; i < dim; ++i)
        for (long long j = 0; j < dim; ++j) a(i, j) = Complex(g(rng), g(rng));
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return rho;
}

}  // namespace

TEST_CASE("product basis bookkeeping") {
    ProductBasis common{4, 6, 6, ModeLayout::common};
    CHECK(common.dim() == 5 * 6 * 6);
    ProductBasis indi{2, 3, 4, ModeLayout::individual};
    CHECK(indi.dim() == 4 * 9 * 4);
    ProductBasis bad{4, 1, 6, ModeLayout::common};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    ProductBasis toobig{4, 3, 3, ModeLayout::individual};
    CHECK_THROWS_AS(toobig.validate(), std::invalid_argument);
}

TEST_CASE("common-mode Hamiltonian") {
    ProductBasis basis{4, 4, 4, ModeLayout::common};
    const auto c = couplings(0.25, 1.0);
    const SparseOp h = build_hamiltonian_common(basis, c);

    SECTION("Hermitian to machine precision") {
        CHECK((Matrix(h) - Matrix(h).adjoint()).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("zero couplings give the zero Hamiltonian") {
        const SparseOp h0 = build_hamiltonian_common(basis, couplings(0.0, 0.0));
        CHECK(Matrix(h0).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("<l=1, p-1, q| H |l=0, p, q> = x sqrt(p)") {
        const Matrix hd(h);
        for (int p = 1; p < 4; ++p) {
            const auto bra = basis.index_common(1, p - 1, 0);
            const auto ket = basis.index_common(0, p, 0);
            // (x/sqrt(N)) <1|sigma+|0> sqrt(p) = (x/sqrt(N)) sqrt(N) sqrt(p)
            CHECK(hd(bra, ket).real() ==
                  Catch::Approx(0.25 * std::sqrt(double(p))).epsilon(1e-14));
        }
    }
    SECTION("photon coupling element: <l=1, p, q-1| H |l=0, p, q> = y sqrt(q)") {
        const Matrix hd(h);
        const auto bra = basis.index_common(1, 0, 1);
        const auto ket = basis.index_common(0, 0, 2);
        CHECK(hd(bra, ket).real() == Catch::Approx(1.0 * std::sqrt(2.0)).epsilon(1e-14));
    }
}

TEST_CASE("individual-mode Hamiltonian") {
    SECTION("N=1 reduces to a Jaynes-Cummings-with-phonon form") {
        ProductBasis basis{1, 3, 3, ModeLayout::individual};
        const auto c = couplings(0.3, 0.8);
        const Matrix h(build_hamiltonian_individual(basis, c));
        CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() == 0.0);
        // index = (spin * P + p) * C + q ; <1, p-1, q|H|0, p, q> = x sqrt(p)
        const int p = 2;
        const long long bra = (1 * 3 + (p - 1)) * 3 + 0;
        const long long ket = (0 * 3 + p) * 3 + 0;
        CHECK(h(bra, ket).real() == Catch::Approx(0.3 * std::sqrt(2.0)).epsilon(1e-14));
    }
    SECTION("N=2 commutes with the particle-relabeling permutation") {
        ProductBasis basis{2, 3, 3, ModeLayout::individual};
        const Matrix h(build_hamiltonian_individual(basis, couplings(0.4, 0.9)));
        const long long dim = basis.dim();
        // swap spin bits and phonon slots of the two particles
        Matrix perm = Matrix::Zero(dim, dim);
        for (long long idx = 0; idx < dim; ++idx) {
            long long rest = idx;
            const int q = static_cast<int>(rest % 3);
            rest /= 3;
            const int p2 = static_cast<int>(rest % 3);
            rest /= 3;
            const int p1 = static_cast<int>(rest % 3);
            rest /= 3;
            const int s2 = static_cast<int>(rest % 2);
            const int s1 = static_cast<int>(rest / 2);
            const long long swapped = (((static_cast<long long>(s2) * 2 + s1) * 3 + p2) * 3 + p1) * 3 + q;
            perm(swapped, idx) = 1.0;
        }
        CHECK((perm * h - h * perm).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("lindblad_rhs") {
    ProductBasis basis{2, 3, 3, ModeLayout::common};
    const SparseOp h = build_hamiltonian_common(basis, couplings(0.25, 1.0));
    const SparseOp c_op = photon_lowering(basis);
    std::mt19937_64 rng(777);

    SECTION("trace preserving for any state") {
        for (int iter = 0; iter < 5; ++iter) {
            const Matrix rho = random_density(basis.dim(), rng);
            const Matrix drho = lindblad_rhs(rho, h, c_op, 1.3);
            CHECK(std::abs(drho.trace()) < 1e-13);
        }
    }
    SECTION("vacuum is an exact fixed point") {
        Matrix rho = Matrix::Zero(basis.dim(), basis.dim());
        rho(basis.index_common(0, 0, 0), basis.index_common(0, 0, 0)) = 1.0;
        const Matrix drho = lindblad_rhs(rho, h, c_op, 1.0);
        CHECK(drho.cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("empty-cavity decay: d<n>/dt = -kappa <n>") {
        Matrix rho = Matrix::Zero(basis.dim(), basis.dim());
        rho(basis.index_common(0, 0, 1), basis.index_common(0, 0, 1)) = 1.0;
        const SparseOp h0(basis.dim(), basis.dim());
        const Matrix drho = lindblad_rhs(rho, h0, c_op, 0.7);
        const Matrix num = Matrix(SparseOp(c_op.adjoint()) * c_op);
        CHECK((num * drho).trace().real() == Catch::Approx(-0.7).epsilon(1e-13));
    }
    SECTION("dimension mismatch is an error") {
        ProductBasis other{2, 4, 4, ModeLayout::common};
        const Matrix rho = Matrix::Zero(other.dim(), other.dim());
        CHECK_THROWS_AS(lindblad_rhs(rho, h, c_op, 1.0), std::invalid_argument);
    }
}

TEST_CASE("propagate_rho preserves the density-matrix invariants") {
    ProductBasis basis{2, 4, 4, ModeLayout::common};
    const auto c = couplings(0.25, 1.0);
    const SparseOp h = build_hamiltonian_common(basis, c);
    const SparseOp c_op = photon_lowering(basis);
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-12;
    cfg.record_stride = 0.5;

    DensityMatrix rho0;
    rho0.rho = Matrix::Zero(basis.dim(), basis.dim());
    rho0.rho(basis.index_common(0, 2, 0), basis.index_common(0, 2, 0)) = 1.0;

    SECTION("kappa = 0 is a unitary channel: trace and purity constant") {
        const auto states = propagate_rho(rho0, h, c_op, 0.0, 0.0, 6.0, cfg, basis);
        for (const auto& st : states) {
            CHECK(std::abs(st.rho.trace().real() - 1.0) < 1e-11);
            CHECK((st.rho * st.rho).trace().real() == Catch::Approx(1.0).margin(1e-8));
        }
    }
    SECTION("dissipative run keeps trace/hermiticity/positivity and purity <= 1") {
        const auto states = propagate_rho(rho0, h, c_op, 1.0, 0.0, 10.0, cfg, basis);
        REQUIRE(states.size() > 10);
        for (const auto& st : states) {
            const RhoDiagnostics d = diagnose(st, basis);
            CHECK(d.trace_residual < 1e-10);
            CHECK(d.hermiticity_residual < 1e-12);
            CHECK(d.min_eigenvalue > -1e-8);
            CHECK((st.rho * st.rho).trace().real() < 1.0 + 1e-8);
        }
    }
    SECTION("initial state populating a top Fock level is rejected") {
        DensityMatrix bad;
        bad.rho = Matrix::Zero(basis.dim(), basis.dim());
        bad.rho(basis.index_common(0, 3, 0), basis.index_common(0, 3, 0)) = 1.0;
        CHECK_THROWS_WITH(propagate_rho(bad, h, c_op, 1.0, 0.0, 1.0, cfg, basis),
                          Catch::Matchers::ContainsSubstring("raise cutoff"));
    }
}

TEST_CASE("scaled-down exact run cools at the linear-oracle rate") {
    // N=4, fig2a couplings: <b+b> decays monotonically after the transient,
    // at the slow rate of the bosonized drift (the exact dual route), which
    // sits ~10% below the x^2(x^2+y^2)/y^4 formula at these parameters.
    ProductBasis basis{4, 4, 4, ModeLayout::common};
    const auto c = couplings(0.25, 1.0);
    const SparseOp h = build_hamiltonian_common(basis, c);
    const SparseOp c_op = photon_lowering(basis);
    DensityMatrix rho0;
    rho0.rho = Matrix::Zero(basis.dim(), basis.dim());
    rho0.rho(basis.index_common(0, 2, 0), basis.index_common(0, 2, 0)) = 1.0;
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-9;
    cfg.abs_tol = 1e-11;
    cfg.record_stride = 0.5;
    const auto states = propagate_rho(rho0, h, c_op, 1.0, 0.0, 40.0, cfg, basis);

    Trajectory traj;
    for (const auto& st : states) {
        double residual = -1.0;
        const MomentState s = extract_moments(st, basis, &residual);
        CHECK(residual >= 0.0);
        CHECK(residual < 1e-10);
        traj.times.push_back(st.t);
        traj.states.push_back({s.m});
        traj.deriv_norms.push_back(0.0);
    }
    for (std::size_t i = 1; i < traj.size(); ++i) {
        if (traj.times[i] <= 10.0) continue;
        CHECK(traj.states[i][0] <= traj.states[i - 1][0] + 1e-9);
    }
    const RateFit fit = fit_exponential_rate(traj, 0, {10.0, 40.0});
    Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
    g(0, 1) = g(1, 0) = c.x;
    g(0, 2) = g(2, 0) = c.y;
    Eigen::Matrix3cd drift = Complex(0.0, -1.0) * g;
    drift(2, 2) -= 0.5;
    Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(drift);
    double max_re = -1e300;
    for (int i = 0; i < 3; ++i) max_re = std::max(max_re, es.eigenvalues()(i).real());
    const double oracle_rate = -2.0 * max_re;
    CHECK(fit.rate == Catch::Approx(oracle_rate).epsilon(0.05));
}

TEST_CASE("extract_moments") {
    SECTION("vacuum maps to the all-zero state with s3 = -N/2") {
        ProductBasis basis{4, 3, 3, ModeLayout::common};
        DensityMatrix rho;
        rho.rho = Matrix::Zero(basis.dim(), basis.dim());
        rho.rho(basis.index_common(0, 0, 0), basis.index_common(0, 0, 0)) = 1.0;
        const MomentState s = extract_moments(rho, basis);
        CHECK(s.m == 0.0);
        CHECK(s.n == 0.0);
        CHECK(s.s3 == -2.0);
        CHECK(s.u1 == 0.0);
        CHECK(s.u2 == 0.0);
        CHECK(s.k3 == 0.0);
    }
    SECTION("one phonon: m = 1, rest zero") {
        ProductBasis basis{4, 3, 3, ModeLayout::common};
        DensityMatrix rho;
        rho.rho = Matrix::Zero(basis.dim(), basis.dim());
        rho.rho(basis.index_common(0, 1, 0), basis.index_common(0, 1, 0)) = 1.0;
        const MomentState s = extract_moments(rho, basis);
        CHECK(s.m == Catch::Approx(1.0).margin(1e-14));
        CHECK(s.n == 0.0);
        CHECK(s.s3 == -2.0);
        CHECK(s.k3 == 0.0);
    }
    SECTION("coherent superposition fixes the u1 sign convention") {
        // (|l=0, 1 phonon> + i |l=1, 0 phonons>)/sqrt(2) at N=1 gives u1 = +1;
        // the same superposition without the i phase gives u1 = 0.
        ProductBasis basis{1, 2, 2, ModeLayout::common};
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(basis.dim());
        psi(basis.index_common(0, 1, 0)) = 1.0 / std::sqrt(2.0);
        psi(basis.index_common(1, 0, 0)) = Complex(0.0, 1.0 / std::sqrt(2.0));
        DensityMatrix rho;
        rho.rho = psi * psi.adjoint();
        const MomentState s = extract_moments(rho, basis);
        CHECK(s.u1 == Catch::Approx(1.0).epsilon(1e-13));
        CHECK(s.m == Catch::Approx(0.5).margin(1e-14));
        CHECK(s.s3 == Catch::Approx(0.0).margin(1e-14));

        Eigen::VectorXcd real_psi = Eigen::VectorXcd::Zero(basis.dim());
        real_psi(basis.index_common(0, 1, 0)) = 1.0 / std::sqrt(2.0);
        real_psi(basis.index_common(1, 0, 0)) = 1.0 / std::sqrt(2.0);
        DensityMatrix rho2;
        rho2.rho = real_psi * real_psi.adjoint();
        CHECK(extract_moments(rho2, basis).u1 == Catch::Approx(0.0).margin(1e-14));
    }
    SECTION("individual layout sums the per-particle moments") {
        ProductBasis basis{2, 3, 3, ModeLayout::individual};
        // particle 1 carries one phonon: |s1 s2; p1 p2; q> = |00;10;0>
        Matrix rho = Matrix::Zero(basis.dim(), basis.dim());
        const long long idx = ((0LL * 3 + 1) * 3 + 0) * 3 + 0;
        rho(idx, idx) = 1.0;
        const MomentState s = extract_moments({rho, 0.0}, basis);
        CHECK(s.m == Catch::Approx(1.0).margin(1e-14));
        CHECK(s.s3 == Catch::Approx(-1.0).margin(1e-14));  // sum of sigma3_i
        CHECK(s.n == 0.0);
    }
}
