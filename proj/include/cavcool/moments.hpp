#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavcool/model.hpp"

namespace cavcool {

// Semiclassical state of the cooperative dynamics. The operator coherences
//   k1 = <S+ b - S- b+>   and   k2 = <S+ c - S- c+>
// are anti-Hermitian expectations, hence purely imaginary; we store the real
// quantities u1 = i k1 and u2 = i k2 so the ODE system stays real.
// k3 = <b c+ + b+ c> is Hermitian and stored directly.
struct MomentState {
    double t = 0.0;
    double m = 0.0;   // mean phonon number
    double n = 0.0;   // mean photon number
    double s3 = 0.0;  // collective inversion, in [-N/2, N/2]
    double u1 = 0.0;  // i k1
    double u2 = 0.0;  // i k2
    double k3 = 0.0;  // phonon-photon coherence

    std::array<double, 6> to_array() const { return {m, n, s3, u1, u2, k3}; }

    static MomentState from_array(double time, const double* v) {
        return {time, v[0], v[1], v[2], v[3], v[4], v[5]};
    }

    bool finite() const {
        return std::isfinite(m) && std::isfinite(n) && std::isfinite(s3) &&
               std::isfinite(u1) && std::isfinite(u2) && std::isfinite(k3);
    }
};

inline constexpr std::array<const char*, 6> kMomentNames = {"m", "n", "s3", "u1", "u2", "k3"};

enum class Scenario { common, individual };

struct ScenarioKind {
    Scenario tag = Scenario::common;
    bool clamp_s3 = false;  // freeze s3 at -N/2, for oracle comparisons
};

// Initial condition used throughout: m = m0, everything else zero, all
// particles in the ground state (s3 = -N/2).
inline MomentState initial_moment_state(double m0, long long n_particles) {
    MomentState s;
    s.m = m0;
    s.s3 = -0.5 * static_cast<double>(n_particles);
    return s;
}

namespace detail {
inline void require_finite_state(const MomentState& s, const char* who) {
    if (!s.finite()) throw std::invalid_argument(std::string(who) + ": non-finite state entry");
}
}  // namespace detail

// Moment equations for cooling of a common vibrational mode. Returns the time
// derivative of each entry; with clamp_s3 the inversion is frozen (ds3 = 0)
// while the stored s3 value still multiplies the coherence drives.
inline MomentState rhs_common(const MomentState& s, const DerivedCouplings& c,
                              const PhysicalParams& p, bool clamp_s3 = false) {
    detail::require_finite_state(s, "rhs_common");
    const double x = c.x, y = c.y, kap = p.kappa;
    const double inv_n = 1.0 / static_cast<double>(p.n_particles);
    MomentState d;
    d.t = 1.0;
    d.m = x * s.u1;
    d.n = y * s.u2 - kap * s.n;
    d.s3 = clamp_s3 ? 0.0 : -(x * s.u1 + y * s.u2);
    d.u1 = 2.0 * inv_n * (2.0 * x * s.m + y * s.k3) * s.s3;
    d.u2 = 2.0 * inv_n * (2.0 * y * s.n + x * s.k3) * s.s3 - 0.5 * kap * s.u2;
    d.k3 = y * s.u1 + x * s.u2 - 0.5 * kap * s.k3;
    return d;
}

// Moment equations for cooling of individual phonon modes (tilde variables:
// totals over the N particles). Note the 1/N^2 scale of the coherence drives
// and the extra factor N on the photon term.
inline MomentState rhs_individual(const MomentState& s, const DerivedCouplings& c,
                                  const PhysicalParams& p, bool clamp_s3 = false) {
    detail::require_finite_state(s, "rhs_individual");
    const double x = c.x, y = c.y, kap = p.kappa;
    const double nn = static_cast<double>(p.n_particles);
    const double inv_n2 = 1.0 / (nn * nn);
    MomentState d;
    d.t = 1.0;
    d.m = x * s.u1;
    d.n = y * s.u2 - kap * s.n;
    d.s3 = clamp_s3 ? 0.0 : -(x * s.u1 + y * s.u2);
    d.u1 = 2.0 * inv_n2 * (2.0 * x * s.m + y * s.k3) * s.s3;
    d.u2 = 2.0 * inv_n2 * (2.0 * nn * y * s.n + x * s.k3) * s.s3 - 0.5 * kap * s.u2;
    d.k3 = y * s.u1 + x * s.u2 - 0.5 * kap * s.k3;
    return d;
}

inline MomentState moment_rhs(const MomentState& s, const DerivedCouplings& c,
                              const PhysicalParams& p, const ScenarioKind& kind) {
    return kind.tag == Scenario::common ? rhs_common(s, c, p, kind.clamp_s3)
                                        : rhs_individual(s, c, p, kind.clamp_s3);
}

// Q = m + (x/y)^2 n - (x/y) k3. Conserved by both scenarios when kappa = 0;
// its kappa-driven decrease is the cooling channel.
inline double conserved_q(const MomentState& s, const DerivedCouplings& c) {
    if (!(c.y > 0.0)) throw std::domain_error("conserved_q: undefined for y = 0");
    const double r = c.x / c.y;
    return s.m + r * r * s.n - r * s.k3;
}

// Stationary relations of the kappa ~ 0 dynamics for a given phonon number:
// k3 = -(2x/y) m, n = (x/y)^2 m, u1 = u2 = 0, s3 = -N/2.
inline MomentState adiabatic_fixed_point(double m, const DerivedCouplings& c,
                                         long long n_particles) {
    if (!(c.y > 0.0)) throw std::domain_error("adiabatic_fixed_point: undefined for y = 0");
    if (!(m >= 0.0)) throw std::invalid_argument("adiabatic_fixed_point: m must be >= 0");
    const double r = c.x / c.y;
    MomentState s;
    s.m = m;
    s.n = r * r * m;
    s.k3 = -2.0 * r * m;
    s.s3 = -0.5 * static_cast<double>(n_particles);
    return s;
}

// Predicted decay rate of m(t) = m0 exp(-R t) for the common-mode scenario,
// R = x^2 (x^2 + y^2) / y^4 * kappa.
inline double analytic_rate_common(const DerivedCouplings& c, double kappa) {
    if (!(c.y > 0.0)) throw std::domain_error("analytic_rate_common: undefined for y = 0");
    const double x2 = c.x * c.x, y2 = c.y * c.y;
    return x2 * (x2 + y2) / (y2 * y2) * kappa;
}

// Predicted decay rate for the individual-mode scenario, R = (x/y)^2 kappa.
inline double analytic_rate_individual(const DerivedCouplings& c, double kappa) {
    if (!(c.y > 0.0)) throw std::domain_error("analytic_rate_individual: undefined for y = 0");
    const double r = c.x / c.y;
    return r * r * kappa;
}

inline double analytic_m(double t, double m0, double rate) {
    if (t < 0.0) throw std::domain_error("analytic_m: negative time");
    if (!(m0 >= 0.0)) throw std::invalid_argument("analytic_m: m0 must be >= 0");
    if (!(rate >= 0.0)) throw std::invalid_argument("analytic_m: rate must be >= 0");
    return m0 * std::exp(-rate * t);
}

}  // namespace cavcool
