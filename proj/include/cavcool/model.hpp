#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavcool {

// All frequencies are plain numbers in one consistent unit, by convention
// units of the cavity decay rate kappa; times are in the reciprocal unit.
// There is no internal unit conversion.
struct PhysicalParams {
    long long n_particles = 1;       // N
    double g = 0.0;                  // single-particle cavity coupling
    double kappa = 0.0;              // cavity decay rate
    double gamma = 0.0;              // spontaneous decay rate, regime checks only
    double eta = 0.0;                // Lamb-Dicke parameter
    std::vector<double> rabi;        // laser Rabi frequency per addressed mode
    std::vector<double> trap_freqs;  // trap frequency per mode, same length

    void validate() const {
        if (n_particles < 1)
            throw std::invalid_argument("params.n_particles: must be a positive integer");
        auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
        if (bad(g)) throw std::invalid_argument("params.g: must be a finite frequency >= 0");
        if (bad(kappa)) throw std::invalid_argument("params.kappa: must be a finite frequency >= 0");
        if (bad(gamma)) throw std::invalid_argument("params.gamma: must be a finite frequency >= 0");
        if (bad(eta)) throw std::invalid_argument("params.eta: must be finite and >= 0");
        if (rabi.empty())
            throw std::invalid_argument("params.rabi: empty mode list, no cooling lasers configured");
        if (rabi.size() != trap_freqs.size())
            throw std::invalid_argument("params.trap_freqs: length must equal params.rabi length");
        for (double w : rabi)
            if (bad(w)) throw std::invalid_argument("params.rabi: entries must be finite frequencies >= 0");
        for (double nu : trap_freqs)
            if (!std::isfinite(nu) || nu <= 0.0)
                throw std::invalid_argument("params.trap_freqs: entries must be finite frequencies > 0");
    }
};

// Collective couplings of the cooperative dynamics:
//   x_nu      = (1/2) sqrt(N) eta Omega_nu   per addressed mode
//   x         = sqrt(sum_nu x_nu^2) = (1/2) sqrt(N) eta Omega
//   y         = sqrt(N) g
//   omega_eff = Omega = sqrt(sum_nu Omega_nu^2)
struct DerivedCouplings {
    std::vector<double> x_per_mode;
    double x = 0.0;
    double y = 0.0;
    double omega_eff = 0.0;
};

namespace detail {

// Quadrature sum with a canonical (sorted) accumulation order, so the result
// is invariant under permutations of the mode list.
inline double quadrature_sum(std::vector<double> values) {
    if (values.size() == 1) return std::abs(values.front());
    for (double& v : values) v = v * v;
    std::sort(values.begin(), values.end());
    double acc = 0.0;
    for (double v : values) acc += v;
    return std::sqrt(acc);
}

}  // namespace detail

inline DerivedCouplings derive_couplings(const PhysicalParams& p) {
    p.validate();
    const double sqrt_n = std::sqrt(static_cast<double>(p.n_particles));
    DerivedCouplings c;
    c.x_per_mode.reserve(p.rabi.size());
    for (double omega : p.rabi) c.x_per_mode.push_back(0.5 * sqrt_n * p.eta * omega);
    c.x = detail::quadrature_sum(c.x_per_mode);
    c.y = sqrt_n * p.g;
    c.omega_eff = detail::quadrature_sum(p.rabi);
    return c;
}

// Operating-regime report. The conditions checked are
//   kappa ~ sqrt(N) g,   (1/2) sqrt(N) eta Omega >> Gamma        (strong damping)
//   ((1/2) eta Omega_nu)^2 << nu^2                               (Lamb-Dicke, per mode)
//   Omega_nu << nu                                               (resolved sideband, per mode)
// ">>" means larger by at least the dominance factor; "~" means the ratio lies
// within [1/dominance, dominance]. A ratio of +inf (zero denominator on the
// small side) counts as satisfied.
struct RegimeReport {
    bool strong_damping_ok = false;
    std::vector<bool> lamb_dicke_ok;
    std::vector<bool> sideband_ok;
    double kappa_to_y = 0.0;   // kappa / (sqrt(N) g)
    double x_to_gamma = 0.0;   // x / Gamma, +inf when Gamma = 0
    std::vector<double> margins;  // [kappa_to_y, x_to_gamma, lamb-dicke..., sideband...]

    bool all_ok() const {
        bool ok = strong_damping_ok;
        for (bool b : lamb_dicke_ok) ok = ok && b;
        for (bool b : sideband_ok) ok = ok && b;
        return ok;
    }
};

inline RegimeReport check_regime(const PhysicalParams& p, double dominance = 10.0) {
    p.validate();
    if (!(dominance > 1.0) || !std::isfinite(dominance))
        throw std::invalid_argument("dominance: must be finite and > 1");
    const DerivedCouplings c = derive_couplings(p);
    const double inf = std::numeric_limits<double>::infinity();

    RegimeReport r;
    r.kappa_to_y = (c.y > 0.0) ? p.kappa / c.y : (p.kappa == 0.0 ? 1.0 : inf);
    r.x_to_gamma = (p.gamma > 0.0) ? c.x / p.gamma : inf;
    const bool kappa_matched =
        r.kappa_to_y >= 1.0 / dominance && r.kappa_to_y <= dominance;
    r.strong_damping_ok = kappa_matched && r.x_to_gamma >= dominance;
    r.margins = {r.kappa_to_y, r.x_to_gamma};

    for (std::size_t i = 0; i < p.rabi.size(); ++i) {
        const double drive = 0.5 * p.eta * p.rabi[i];
        const double nu2 = p.trap_freqs[i] * p.trap_freqs[i];
        const double ld_margin = (drive > 0.0) ? nu2 / (drive * drive) : inf;
        r.lamb_dicke_ok.push_back(ld_margin >= dominance);
        r.margins.push_back(ld_margin);
    }
    for (std::size_t i = 0; i < p.rabi.size(); ++i) {
        const double sb_margin = (p.rabi[i] > 0.0) ? p.trap_freqs[i] / p.rabi[i] : inf;
        r.sideband_ok.push_back(sb_margin >= dominance);
        r.margins.push_back(sb_margin);
    }
    return r;
}

}  // namespace cavcool
