#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace cavcool {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

// Collective ladder operators on the symmetric (Dicke) subspace, basis
// |l>, l = 0..dim-1 counting excited particles.
struct LadderOps {
    Matrix sp;  // sigma+
    Matrix sm;  // sigma-
    Matrix s3;  // sigma3
};

namespace detail {

// Truncated ladder: matrix elements <l+1|sigma+|l> = sqrt(l+1) sqrt(N-l),
// <l|sigma3|l> = l - N/2, on the first `dim` levels.
inline LadderOps dicke_ladder_truncated(long long n, int dim) {
    LadderOps ops;
    ops.sp = Matrix::Zero(dim, dim);
    ops.s3 = Matrix::Zero(dim, dim);
    const double nd = static_cast<double>(n);
    for (int l = 0; l + 1 < dim; ++l)
        ops.sp(l + 1, l) = std::sqrt(static_cast<double>(l + 1)) * std::sqrt(nd - l);
    for (int l = 0; l < dim; ++l) ops.s3(l, l) = l - 0.5 * nd;
    ops.sm = ops.sp.adjoint();
    return ops;
}

}  // namespace detail

inline LadderOps build_dicke_ladder(long long n) {
    if (n < 1) throw std::invalid_argument("build_dicke_ladder: N must be >= 1");
    if (n > 4096) throw std::invalid_argument("build_dicke_ladder: N exceeds dimension budget");
    return detail::dicke_ladder_truncated(n, static_cast<int>(n) + 1);
}

// Oracle for the ladder matrix elements: builds sum_i sigma_i^+/sigma_3i on
// the full 2^N product space and projects onto the normalized symmetric
// states (all bitstrings with l excited particles, weight 1/sqrt(C(N,l))).
inline LadderOps brute_force_symmetric(int n) {
    if (n < 1 || n > 5) throw std::invalid_argument("brute_force_symmetric: N must be in 1..5");
    const int dim = 1 << n;

    Matrix sp = Matrix::Zero(dim, dim);
    Matrix s3 = Matrix::Zero(dim, dim);
    for (int state = 0; state < dim; ++state) {
        int pop = 0;
        for (int i = 0; i < n; ++i) {
            if (state & (1 << i)) {
                ++pop;
            } else {
                sp(state | (1 << i), state) += 1.0;
            }
        }
        s3(state, state) = pop - 0.5 * n;
    }

    // symmetric-state basis, column l spans the popcount-l bitstrings
    Matrix basis = Matrix::Zero(dim, n + 1);
    std::vector<double> binom(n + 1, 1.0);
    for (int l = 1; l <= n; ++l) binom[l] = binom[l - 1] * (n - l + 1) / l;
    for (int state = 0; state < dim; ++state) {
        int pop = 0;
        for (int i = 0; i < n; ++i) pop += (state >> i) & 1;
        basis(state, pop) = 1.0 / std::sqrt(binom[pop]);
    }

    LadderOps ops;
    ops.sp = basis.adjoint() * sp * basis;
    ops.sm = basis.adjoint() * sp.adjoint() * basis;
    ops.s3 = basis.adjoint() * s3 * basis;
    return ops;
}

// Holstein-Primakoff realization on the lowest `dim` levels:
// S+ with <l+1|S+|l> = sqrt(l+1), A_S = sqrt(1 - S+S-/N) (diagonal,
// entries sqrt(1 - l/N)), and the reconstruction sigma+ = sqrt(N) S+ A_S.
struct HpOps {
    Matrix s_plus;
    Matrix a_s;
    Matrix sigma_plus;  // sqrt(N) * S+ * A_S
};

inline HpOps hp_operators(long long n, int dim) {
    if (n < 1) throw std::invalid_argument("hp_operators: N must be >= 1");
    if (dim < 1 || dim > n + 1)
        throw std::invalid_argument("hp_operators: dim must be in 1..N+1 (A_S argument negative)");
    HpOps ops;
    ops.s_plus = Matrix::Zero(dim, dim);
    ops.a_s = Matrix::Zero(dim, dim);
    const double nd = static_cast<double>(n);
    for (int l = 0; l + 1 < dim; ++l) ops.s_plus(l + 1, l) = std::sqrt(static_cast<double>(l + 1));
    for (int l = 0; l < dim; ++l) ops.a_s(l, l) = std::sqrt(1.0 - l / nd);
    ops.sigma_plus = std::sqrt(nd) * ops.s_plus * ops.a_s;
    return ops;
}

// Convergence of su(2) to the Heisenberg-Weyl commutator on low Dicke levels:
// returns || ([sigma-/sqrt(N), sigma+/sqrt(N)] - 1) |l> || for l = 0..l_max,
// which equals 2l/N.
inline std::vector<double> contraction_defect(long long n, int l_max) {
    if (n < 1) throw std::invalid_argument("contraction_defect: N must be >= 1");
    if (l_max < 0 || l_max > n)
        throw std::invalid_argument("contraction_defect: l_max must be in 0..N");
    const int dim = static_cast<int>(std::min<long long>(n + 1, l_max + 2));
    const LadderOps ops = detail::dicke_ladder_truncated(n, dim);
    const double inv_n = 1.0 / static_cast<double>(n);
    const Matrix comm = inv_n * (ops.sm * ops.sp - ops.sp * ops.sm) - Matrix::Identity(dim, dim);
    std::vector<double> defects;
    defects.reserve(l_max + 1);
    for (int l = 0; l <= l_max; ++l) defects.push_back(comm.col(l).norm());
    return defects;
}

}  // namespace cavcool
