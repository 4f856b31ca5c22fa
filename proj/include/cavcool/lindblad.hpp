#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavcool/dicke.hpp"
#include "cavcool/integrator.hpp"
#include "cavcool/model.hpp"
#include "cavcool/moments.hpp"

namespace cavcool {

using SparseOp = Eigen::SparseMatrix<Complex>;

enum class ModeLayout { common, individual };

// Product basis for exact runs.
//   common:     Dicke (N+1) x phonon Fock (P) x photon Fock (C),
//               index = (l*P + p)*C + q
//   individual: spin_1..spin_N x phonon_1..phonon_N x photon Fock (C)
struct ProductBasis {
    long long n_particles = 1;
    int phonon_cutoff = 2;
    int photon_cutoff = 2;
    ModeLayout layout = ModeLayout::common;

    int dicke_dim() const { return static_cast<int>(n_particles) + 1; }

    long long dim() const {
        if (layout == ModeLayout::common)
            return static_cast<long long>(dicke_dim()) * phonon_cutoff * photon_cutoff;
        long long d = photon_cutoff;
        for (long long i = 0; i < n_particles; ++i) d *= 2LL * phonon_cutoff;
        return d;
    }

    long long index_common(int l, int p, int q) const {
        return (static_cast<long long>(l) * phonon_cutoff + p) * photon_cutoff + q;
    }

    void validate() const {
        if (n_particles < 1) throw std::invalid_argument("basis: N must be >= 1");
        if (phonon_cutoff < 2 || photon_cutoff < 2)
            throw std::invalid_argument("basis: Fock cutoffs must be >= 2");
        if (layout == ModeLayout::common && n_particles > 12)
            throw std::invalid_argument("basis: common-layout exact runs limited to N <= 12");
        if (layout == ModeLayout::individual && n_particles > 3)
            throw std::invalid_argument("basis: individual-layout exact runs limited to N <= 3");
        if (dim() > 1'500'000)
            throw std::invalid_argument("basis: dimension overflow, shrink N or the cutoffs");
    }
};

namespace detail {

inline SparseOp sparse_identity(long long dim) {
    SparseOp id(dim, dim);
    id.setIdentity();
    return id;
}

inline SparseOp fock_lowering(int dim) {
    SparseOp a(dim, dim);
    a.reserve(Eigen::VectorXi::Constant(dim, 1));
    for (int k = 1; k < dim; ++k) a.insert(k - 1, k) = std::sqrt(static_cast<double>(k));
    a.makeCompressed();
    return a;
}

inline SparseOp kron3(const SparseOp& a, const SparseOp& b, const SparseOp& c) {
    SparseOp ab = Eigen::kroneckerProduct(a, b).eval();
    return Eigen::kroneckerProduct(ab, c).eval();
}

// chain of `count` single-site identities of size `site`, with `op` at `slot`
inline SparseOp site_chain(const SparseOp& op, int site, int count, int slot) {
    SparseOp out = detail::sparse_identity(1);
    for (int i = 0; i < count; ++i) {
        const SparseOp& factor = (i == slot) ? op : detail::sparse_identity(site);
        out = Eigen::kroneckerProduct(out, factor).eval();
    }
    return out;
}

}  // namespace detail

// -------- operators embedded into the full product space --------

inline SparseOp phonon_lowering(const ProductBasis& b) {
    if (b.layout != ModeLayout::common)
        throw std::invalid_argument("phonon_lowering: mode index required for individual layout");
    return detail::kron3(detail::sparse_identity(b.dicke_dim()),
                         detail::fock_lowering(b.phonon_cutoff),
                         detail::sparse_identity(b.photon_cutoff));
}

inline SparseOp phonon_lowering(const ProductBasis& b, int particle) {
    if (b.layout != ModeLayout::individual)
        throw std::invalid_argument("phonon_lowering(i): individual layout only");
    const int n = static_cast<int>(b.n_particles);
    SparseOp spins = detail::sparse_identity(1LL << n);
    SparseOp phonons =
        detail::site_chain(detail::fock_lowering(b.phonon_cutoff), b.phonon_cutoff, n, particle);
    return detail::kron3(spins, phonons, detail::sparse_identity(b.photon_cutoff));
}

inline SparseOp photon_lowering(const ProductBasis& b) {
    if (b.layout == ModeLayout::common)
        return detail::kron3(detail::sparse_identity(b.dicke_dim()),
                             detail::sparse_identity(b.phonon_cutoff),
                             detail::fock_lowering(b.photon_cutoff));
    const int n = static_cast<int>(b.n_particles);
    long long rest = 1LL << n;
    for (int i = 0; i < n; ++i) rest *= b.phonon_cutoff;
    return Eigen::kroneckerProduct(detail::sparse_identity(rest),
                                   detail::fock_lowering(b.photon_cutoff))
        .eval();
}

// exact collective sigma+ on the Dicke factor (common layout)
inline SparseOp collective_raising(const ProductBasis& b) {
    if (b.layout != ModeLayout::common)
        throw std::invalid_argument("collective_raising: common layout only");
    const SparseOp sp = build_dicke_ladder(b.n_particles).sp.sparseView();
    return detail::kron3(sp, detail::sparse_identity(b.phonon_cutoff),
                         detail::sparse_identity(b.photon_cutoff));
}

inline SparseOp collective_inversion(const ProductBasis& b) {
    if (b.layout != ModeLayout::common)
        throw std::invalid_argument("collective_inversion: common layout only");
    const SparseOp s3 = build_dicke_ladder(b.n_particles).s3.sparseView();
    return detail::kron3(s3, detail::sparse_identity(b.phonon_cutoff),
                         detail::sparse_identity(b.photon_cutoff));
}

inline SparseOp spin_raising(const ProductBasis& b, int particle) {
    if (b.layout != ModeLayout::individual)
        throw std::invalid_argument("spin_raising: individual layout only");
    const int n = static_cast<int>(b.n_particles);
    SparseOp sp(2, 2);
    sp.insert(1, 0) = 1.0;
    sp.makeCompressed();
    SparseOp spins = detail::site_chain(sp, 2, n, particle);
    long long ph = 1;
    for (int i = 0; i < n; ++i) ph *= b.phonon_cutoff;
    return detail::kron3(spins, detail::sparse_identity(ph),
                         detail::sparse_identity(b.photon_cutoff));
}

inline SparseOp spin_inversion(const ProductBasis& b, int particle) {
    if (b.layout != ModeLayout::individual)
        throw std::invalid_argument("spin_inversion: individual layout only");
    const int n = static_cast<int>(b.n_particles);
    SparseOp s3(2, 2);
    s3.insert(0, 0) = -0.5;
    s3.insert(1, 1) = 0.5;
    s3.makeCompressed();
    SparseOp spins = detail::site_chain(s3, 2, n, particle);
    long long ph = 1;
    for (int i = 0; i < n; ++i) ph *= b.phonon_cutoff;
    return detail::kron3(spins, detail::sparse_identity(ph),
                         detail::sparse_identity(b.photon_cutoff));
}

// -------- Hamiltonians --------

// H = (x/sqrt(N)) sigma+ b + (y/sqrt(N)) sigma+ c + H.c. with the exact
// collective sigma+; note x/sqrt(N) = (1/2) eta Omega and y/sqrt(N) = g, so
// the bosonized form sqrt(N) S+ A_S is recovered on levels l << N.
inline SparseOp build_hamiltonian_common(const ProductBasis& b, const DerivedCouplings& c) {
    b.validate();
    if (b.layout != ModeLayout::common)
        throw std::invalid_argument("build_hamiltonian_common: common layout only");
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(b.n_particles));
    const SparseOp sp = collective_raising(b);
    const SparseOp bop = phonon_lowering(b);
    const SparseOp cop = photon_lowering(b);
    SparseOp half = (c.x * inv_sqrt_n) * (sp * bop) + (c.y * inv_sqrt_n) * (sp * cop);
    SparseOp h = half + SparseOp(half.adjoint());
    h.makeCompressed();
    return h;
}

// H = (1/sqrt(N)) sum_i (x sigma_i+ b_i + y sigma_i+ c) + H.c.
inline SparseOp build_hamiltonian_individual(const ProductBasis& b, const DerivedCouplings& c) {
    b.validate();
    if (b.layout != ModeLayout::individual)
        throw std::invalid_argument("build_hamiltonian_individual: individual layout only");
    const int n = static_cast<int>(b.n_particles);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    const SparseOp cop = photon_lowering(b);
    SparseOp half(b.dim(), b.dim());
    for (int i = 0; i < n; ++i) {
        const SparseOp sp = spin_raising(b, i);
        half = half + SparseOp((c.x * inv_sqrt_n) * (sp * phonon_lowering(b, i)) +
                               (c.y * inv_sqrt_n) * (sp * cop));
    }
    SparseOp h = half + SparseOp(half.adjoint());
    h.makeCompressed();
    return h;
}

// -------- Lindblad dynamics --------

struct DensityMatrix {
    Matrix rho;
    double t = 0.0;
};

// rho_dot = -i [H, rho] + kappa (c rho c+ - 1/2 c+c rho - 1/2 rho c+c)
inline Matrix lindblad_rhs(const Matrix& rho, const SparseOp& h, const SparseOp& c_op,
                           double kappa) {
    if (rho.rows() != rho.cols() || rho.rows() != h.rows() || rho.rows() != c_op.rows())
        throw std::invalid_argument("lindblad_rhs: dimension mismatch");
    const Complex im(0.0, 1.0);
    Matrix out = -im * (h * rho - rho * h);
    if (kappa != 0.0) {
        const SparseOp cdag = c_op.adjoint();
        const SparseOp ncc = SparseOp(cdag * c_op);
        const Matrix crho = c_op * rho;
        out.noalias() += kappa * (crho * cdag);
        out.noalias() -= (0.5 * kappa) * (ncc * rho);
        out.noalias() -= (0.5 * kappa) * (rho * ncc);
    }
    return out;
}

struct RhoDiagnostics {
    double trace_residual = 0.0;      // |tr rho - 1|
    double hermiticity_residual = 0.0;  // max |rho - rho+|
    double min_eigenvalue = 0.0;
    double top_level_population = 0.0;  // total weight on any truncated top Fock level
};

namespace detail {

inline double top_level_population(const Matrix& rho, const ProductBasis& b) {
    double pop = 0.0;
    const long long dim = b.dim();
    if (b.layout == ModeLayout::common) {
        for (int l = 0; l < b.dicke_dim(); ++l)
            for (int q = 0; q < b.photon_cutoff; ++q)
                pop += rho(b.index_common(l, b.phonon_cutoff - 1, q),
                           b.index_common(l, b.phonon_cutoff - 1, q))
                           .real();
        for (int l = 0; l < b.dicke_dim(); ++l)
            for (int p = 0; p < b.phonon_cutoff; ++p)
                pop += rho(b.index_common(l, p, b.photon_cutoff - 1),
                           b.index_common(l, p, b.photon_cutoff - 1))
                           .real();
        return pop;
    }
    const int n = static_cast<int>(b.n_particles);
    for (long long idx = 0; idx < dim; ++idx) {
        long long rest = idx;
        const int q = static_cast<int>(rest % b.photon_cutoff);
        rest /= b.photon_cutoff;
        bool top = q == b.photon_cutoff - 1;
        for (int i = 0; i < n && !top; ++i) {
            top = rest % b.phonon_cutoff == b.phonon_cutoff - 1;
            rest /= b.phonon_cutoff;
        }
        if (top) pop += rho(idx, idx).real();
    }
    return pop;
}

}  // namespace detail

inline RhoDiagnostics diagnose(const DensityMatrix& state, const ProductBasis& b) {
    RhoDiagnostics d;
    d.trace_residual = std::abs(state.rho.trace() - Complex(1.0, 0.0));
    d.hermiticity_residual = (state.rho - state.rho.adjoint()).cwiseAbs().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (state.rho + state.rho.adjoint()),
                                             Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    d.top_level_population = detail::top_level_population(state.rho, b);
    return d;
}

inline void require_valid(const DensityMatrix& state, const ProductBasis& b) {
    const RhoDiagnostics d = diagnose(state, b);
    const std::string at = " at t = " + std::to_string(state.t);
    if (d.hermiticity_residual > 1e-12)
        throw std::runtime_error("density matrix invariant violated: hermiticity" + at);
    if (d.trace_residual > 1e-10)
        throw std::runtime_error("density matrix invariant violated: unit trace" + at);
    if (d.min_eigenvalue < -1e-8)
        throw std::runtime_error("density matrix invariant violated: positivity" + at);
    if (d.top_level_population > 1e-8)
        throw std::runtime_error(
            "raise cutoff: top Fock level population exceeds 1e-8" + at);
}

// Integrates the master equation with the adaptive integrator over the
// vectorized density matrix. Every recorded state is checked against the
// DensityMatrix invariants (and the Fock-truncation guard).
inline std::vector<DensityMatrix> propagate_rho(const DensityMatrix& rho0, const SparseOp& h,
                                                const SparseOp& c_op, double kappa,
                                                double t0, double t1,
                                                const IntegratorConfig& cfg,
                                                const ProductBasis& basis) {
    basis.validate();
    require_valid(rho0, basis);
    const long long d = rho0.rho.rows();
    std::vector<double> y0(2 * d * d);
    Eigen::Map<Matrix>(reinterpret_cast<Complex*>(y0.data()), d, d) = rho0.rho;

    auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
        dy.resize(y.size());
        const Eigen::Map<const Matrix> rho(reinterpret_cast<const Complex*>(y.data()), d, d);
        Eigen::Map<Matrix>(reinterpret_cast<Complex*>(dy.data()), d, d) =
            lindblad_rhs(rho, h, c_op, kappa);
    };

    const Trajectory traj = integrate(rhs, std::move(y0), t0, t1, cfg);
    std::vector<DensityMatrix> out;
    out.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        DensityMatrix state;
        state.t = traj.times[i];
        state.rho = Eigen::Map<const Matrix>(
            reinterpret_cast<const Complex*>(traj.states[i].data()), d, d);
        require_valid(state, basis);
        out.push_back(std::move(state));
    }
    return out;
}

// -------- moment extraction --------

namespace detail {

inline Complex trace_product(const SparseOp& op, const Matrix& rho) {
    Complex acc(0.0, 0.0);
    for (int k = 0; k < op.outerSize(); ++k)
        for (SparseOp::InnerIterator it(op, k); it; ++it)
            acc += it.value() * rho(it.col(), it.row());
    return acc;
}

}  // namespace detail

// Expectation values (m, n, s3, u1, u2, k3) of the exact state, with the
// collective coherences built from S+ = sigma+/sqrt(N). For the individual
// layout the tilde (summed-over-particles) definitions are used. All outputs
// must be real to 1e-10; the largest imaginary residue is reported through
// imag_residual when given.
inline MomentState extract_moments(const DensityMatrix& state, const ProductBasis& b,
                                   double* imag_residual = nullptr) {
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(b.n_particles));
    Complex m, n, s3, k1, k2, k3;
    const SparseOp cop = photon_lowering(b);
    n = detail::trace_product(SparseOp(SparseOp(cop.adjoint()) * cop), state.rho);
    if (b.layout == ModeLayout::common) {
        const SparseOp bop = phonon_lowering(b);
        const SparseOp sp = collective_raising(b);
        m = detail::trace_product(SparseOp(SparseOp(bop.adjoint()) * bop), state.rho);
        s3 = detail::trace_product(collective_inversion(b), state.rho);
        const SparseOp spb = SparseOp(inv_sqrt_n * (sp * bop));
        const SparseOp spc = SparseOp(inv_sqrt_n * (sp * cop));
        k1 = detail::trace_product(spb, state.rho) -
             detail::trace_product(SparseOp(spb.adjoint()), state.rho);
        k2 = detail::trace_product(spc, state.rho) -
             detail::trace_product(SparseOp(spc.adjoint()), state.rho);
        const SparseOp bcdag = SparseOp(bop * SparseOp(cop.adjoint()));
        k3 = detail::trace_product(bcdag, state.rho) +
             detail::trace_product(SparseOp(bcdag.adjoint()), state.rho);
    } else {
        const int nn = static_cast<int>(b.n_particles);
        for (int i = 0; i < nn; ++i) {
            const SparseOp bi = phonon_lowering(b, i);
            const SparseOp spi = spin_raising(b, i);
            m += detail::trace_product(SparseOp(SparseOp(bi.adjoint()) * bi), state.rho);
            s3 += detail::trace_product(spin_inversion(b, i), state.rho);
            const SparseOp sb = SparseOp(inv_sqrt_n * (spi * bi));
            const SparseOp sc = SparseOp(inv_sqrt_n * (spi * cop));
            k1 += detail::trace_product(sb, state.rho) -
                  detail::trace_product(SparseOp(sb.adjoint()), state.rho);
            k2 += detail::trace_product(sc, state.rho) -
                  detail::trace_product(SparseOp(sc.adjoint()), state.rho);
            const SparseOp bc = SparseOp(bi * SparseOp(cop.adjoint()));
            k3 += detail::trace_product(bc, state.rho) +
                  detail::trace_product(SparseOp(bc.adjoint()), state.rho);
        }
    }

    const Complex im(0.0, 1.0);
    const Complex u1 = im * k1, u2 = im * k2;
    double residual = std::abs(m.imag());
    residual = std::max(residual, std::abs(n.imag()));
    residual = std::max(residual, std::abs(s3.imag()));
    residual = std::max(residual, std::abs(u1.imag()));
    residual = std::max(residual, std::abs(u2.imag()));
    residual = std::max(residual, std::abs(k3.imag()));
    if (imag_residual) *imag_residual = residual;
    if (residual > 1e-10)
        throw std::runtime_error("extract_moments: imaginary residue " +
                                 std::to_string(residual) + " exceeds 1e-10");
    MomentState out;
    out.t = state.t;
    out.m = m.real();
    out.n = n.real();
    out.s3 = s3.real();
    out.u1 = u1.real();
    out.u2 = u2.real();
    out.k3 = k3.real();
    return out;
}

}  // namespace cavcool
