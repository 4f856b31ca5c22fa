#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cavcool/integrator.hpp"
#include "cavcool/model.hpp"
#include "cavcool/moments.hpp"

namespace cavcool {

using Complex = std::complex<double>;

// Normal-ordered second moments M_ij = <a_i+ a_j> of the bosonized three-mode
// system, mode order a = (S, b, c).
struct CovarianceState {
    Eigen::Matrix3cd m = Eigen::Matrix3cd::Zero();
    double t = 0.0;
};

// Drift of the Heisenberg equations a_dot = K a for the linear coupled-mode
// Hamiltonian ( x S+b + y S+c + H.c. ) with cavity decay:
// K = -i G - D, G coupling x on (S,b) and y on (S,c), D = diag(0, 0, kappa/2).
inline Eigen::Matrix3cd bosonic_drift(const DerivedCouplings& c, double kappa) {
    Eigen::Matrix3cd g = Eigen::Matrix3cd::Zero();
    g(0, 1) = g(1, 0) = c.x;
    g(0, 2) = g(2, 0) = c.y;
    Eigen::Matrix3cd k = std::complex<double>(0.0, -1.0) * g;
    k(2, 2) -= 0.5 * kappa;
    return k;
}

// Closed-form propagation M(t) = e^{K_conj t} M0 e^{K^T t}.
inline Eigen::Matrix3cd covariance_closed_form(const Eigen::Matrix3cd& m0,
                                               const Eigen::Matrix3cd& k, double t) {
    const Eigen::Matrix3cd ec = (k.conjugate() * t).exp();
    const Eigen::Matrix3cd et = (k.transpose() * t).exp();
    return ec * m0 * et;
}

// Slowest decay rate of the covariance flow: -2 max Re(eigenvalues of K).
inline double covariance_slow_rate(const Eigen::Matrix3cd& k) {
    Eigen::ComplexEigenSolver<Eigen::Matrix3cd> es(k);
    double max_re = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) max_re = std::max(max_re, es.eigenvalues()(i).real());
    return -2.0 * max_re;
}

// Integrates M_dot = K_conj M + M K^T with the adaptive integrator. The
// zero-temperature bath adds no source term to normal-ordered moments, so the
// flow is homogeneous and matches the closed form to integrator tolerance.
inline std::vector<CovarianceState> propagate_covariance(const CovarianceState& m0,
                                                         const Eigen::Matrix3cd& k,
                                                         double t0, double t1,
                                                         const IntegratorConfig& cfg) {
    if ((m0.m - m0.m.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("propagate_covariance: M0 must be Hermitian");
    const Eigen::Matrix3cd kc = k.conjugate();
    const Eigen::Matrix3cd kt = k.transpose();

    std::vector<double> y0(18);
    Eigen::Map<Eigen::Matrix3cd>(reinterpret_cast<Complex*>(y0.data())) = m0.m;
    auto rhs = [&](double, const std::vector<double>& y, std::vector<double>& dy) {
        dy.resize(18);
        const Eigen::Map<const Eigen::Matrix3cd> m(reinterpret_cast<const Complex*>(y.data()));
        Eigen::Map<Eigen::Matrix3cd>(reinterpret_cast<Complex*>(dy.data())) = kc * m + m * kt;
    };

    const Trajectory traj = integrate(rhs, std::move(y0), t0, t1, cfg);
    std::vector<CovarianceState> out;
    out.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CovarianceState s;
        s.t = traj.times[i];
        s.m = Eigen::Map<const Eigen::Matrix3cd>(
            reinterpret_cast<const Complex*>(traj.states[i].data()));
        out.push_back(s);
    }
    return out;
}

// Moment extraction from the covariance matrix:
// m = M_bb, n = M_cc, s3 = M_SS - N/2, u1 = -2 Im M_Sb, u2 = -2 Im M_Sc,
// k3 = 2 Re M_bc.
inline MomentState covariance_to_moments(const CovarianceState& s, long long n_particles) {
    MomentState out;
    out.t = s.t;
    out.m = s.m(1, 1).real();
    out.n = s.m(2, 2).real();
    out.s3 = s.m(0, 0).real() - 0.5 * static_cast<double>(n_particles);
    out.u1 = -2.0 * s.m(0, 1).imag();
    out.u2 = -2.0 * s.m(0, 2).imag();
    out.k3 = 2.0 * s.m(1, 2).real();
    return out;
}

// Canonical embedding of a moment state into a covariance matrix (the parts
// of M a MomentState does not represent are set to zero). Inverse of
// covariance_to_moments on its image.
inline CovarianceState moments_to_covariance(const MomentState& s, long long n_particles) {
    CovarianceState out;
    out.t = s.t;
    out.m(0, 0) = s.s3 + 0.5 * static_cast<double>(n_particles);
    out.m(1, 1) = s.m;
    out.m(2, 2) = s.n;
    out.m(0, 1) = Complex(0.0, -0.5 * s.u1);
    out.m(1, 0) = Complex(0.0, 0.5 * s.u1);
    out.m(0, 2) = Complex(0.0, -0.5 * s.u2);
    out.m(2, 0) = Complex(0.0, 0.5 * s.u2);
    out.m(1, 2) = Complex(0.5 * s.k3, 0.0);
    out.m(2, 1) = Complex(0.5 * s.k3, 0.0);
    return out;
}

}  // namespace cavcool
