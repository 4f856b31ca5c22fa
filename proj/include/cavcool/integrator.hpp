#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cavcool {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = 0.0;       // 0 = unlimited
    double initial_step = 0.0;   // 0 = automatic
    long long max_steps = 10'000'000;
    double record_stride = 0.0;  // 0 = record every accepted step
    double steady_threshold = 0.0;  // 0 = off; else stop when |rhs| drops below
                                    // threshold * (running max of |rhs|)

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw std::invalid_argument("integrator: tolerances must be > 0");
        if (max_steps <= 0) throw std::invalid_argument("integrator: max_steps must be > 0");
        if (record_stride < 0.0 || max_step < 0.0 || initial_step < 0.0)
            throw std::invalid_argument("integrator: steps and strides must be >= 0");
    }
};

enum class Termination { t_end, steady_state, step_limit };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::t_end: return "t_end";
        case Termination::steady_state: return "steady_state";
        case Termination::step_limit: return "step_limit";
    }
    return "?";
}

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<double> deriv_norms;  // sup-norm of the rhs at each recorded point
    Termination terminated_by = Termination::t_end;
    std::size_t n_accepted = 0;
    std::size_t n_rejected = 0;

    std::size_t size() const { return times.size(); }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> col(states.size());
        for (std::size_t i = 0; i < states.size(); ++i) col[i] = states[i].at(j);
        return col;
    }
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference between the 5th- and embedded 4th-order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Cubic Hermite interpolant on an accepted step [t0, t0+h].
inline void hermite(double theta, double h, const std::vector<double>& y0,
                    const std::vector<double>& f0, const std::vector<double>& y1,
                    const std::vector<double>& f1, std::vector<double>& out) {
    const double t2 = theta * theta, t3 = t2 * theta;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + theta;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    out.resize(y0.size());
    for (std::size_t i = 0; i < y0.size(); ++i)
        out[i] = h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i];
}

}  // namespace detail

// Adaptive explicit Runge-Kutta integration (Dormand-Prince 5(4)) of
// dy/dt = rhs(t, y). The local error per step satisfies
// |err_i| <= abs_tol + rel_tol * |y_i| componentwise. Output is sampled every
// record_stride time units via cubic Hermite interpolation between accepted
// steps (every accepted step when the stride is 0). Deterministic: identical
// inputs produce bit-identical trajectories on one platform.
template <typename Rhs>
Trajectory integrate(Rhs&& rhs, std::vector<double> y0, double t0, double t1,
                     const IntegratorConfig& cfg = {}) {
    using detail::Dopri5;
    cfg.validate();
    if (!(t1 > t0)) throw std::invalid_argument("integrate: t1 must exceed t0");
    for (double v : y0)
        if (!std::isfinite(v)) throw std::invalid_argument("integrate: non-finite initial state");

    const std::size_t dim = y0.size();
    const double span = t1 - t0;
    const double hmax = cfg.max_step > 0.0 ? std::min(cfg.max_step, span) : span;

    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    std::vector<double> y = std::move(y0), ytmp(dim), ynew(dim), yerr(dim), yrec, frec(dim);

    Trajectory traj;
    double steady_max = 0.0;
    auto record = [&](double t, const std::vector<double>& state, const std::vector<double>& deriv) {
        traj.times.push_back(t);
        traj.states.push_back(state);
        const double norm = detail::sup_norm(deriv);
        traj.deriv_norms.push_back(norm);
        steady_max = std::max(steady_max, norm);
        return cfg.steady_threshold > 0.0 && norm <= cfg.steady_threshold * steady_max;
    };

    double t = t0;
    rhs(t, y, k1);
    if (record(t, y, k1)) {
        traj.terminated_by = Termination::steady_state;
        return traj;
    }
    double next_record = cfg.record_stride > 0.0
                             ? t0 + cfg.record_stride
                             : std::numeric_limits<double>::quiet_NaN();

    // standard deterministic starting-step heuristic
    double h = cfg.initial_step;
    if (h <= 0.0) {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
            d0 = std::max(d0, std::abs(y[i]) / sc);
            d1 = std::max(d1, std::abs(k1[i]) / sc);
        }
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, hmax);
        for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h0 * k1[i];
        rhs(t + h0, ytmp, k2);
        double d2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
            d2 = std::max(d2, std::abs(k2[i] - k1[i]) / sc);
        }
        d2 /= h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm > 1e-15 ? std::pow(0.01 / dm, 0.2) : std::max(1e-6, h0 * 1e-3);
        h = std::min({100.0 * h0, h1, hmax});
    }
    h = std::min(h, hmax);

    const double uround = std::numeric_limits<double>::epsilon();
    long long steps = 0;
    bool done = false;
    while (!done) {
        if (steps >= cfg.max_steps) {
            traj.terminated_by = Termination::step_limit;
            return traj;
        }
        if (h < 4.0 * uround * std::max(std::abs(t), std::abs(t1)))
            throw std::runtime_error("integrate: step size underflow at t = " + std::to_string(t));
        bool last = false;
        if (t + h >= t1) {
            h = t1 - t;
            last = true;
        }

        for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * Dopri5::a21 * k1[i];
        rhs(t + Dopri5::c2 * h, ytmp, k2);
        for (std::size_t i = 0; i < dim; ++i)
            ytmp[i] = y[i] + h * (Dopri5::a31 * k1[i] + Dopri5::a32 * k2[i]);
        rhs(t + Dopri5::c3 * h, ytmp, k3);
        for (std::size_t i = 0; i < dim; ++i)
            ytmp[i] = y[i] + h * (Dopri5::a41 * k1[i] + Dopri5::a42 * k2[i] + Dopri5::a43 * k3[i]);
        rhs(t + Dopri5::c4 * h, ytmp, k4);
        for (std::size_t i = 0; i < dim; ++i)
            ytmp[i] = y[i] + h * (Dopri5::a51 * k1[i] + Dopri5::a52 * k2[i] +
                                  Dopri5::a53 * k3[i] + Dopri5::a54 * k4[i]);
        rhs(t + Dopri5::c5 * h, ytmp, k5);
        for (std::size_t i = 0; i < dim; ++i)
            ytmp[i] = y[i] + h * (Dopri5::a61 * k1[i] + Dopri5::a62 * k2[i] +
                                  Dopri5::a63 * k3[i] + Dopri5::a64 * k4[i] + Dopri5::a65 * k5[i]);
        rhs(t + h, ytmp, k6);
        for (std::size_t i = 0; i < dim; ++i)
            ynew[i] = y[i] + h * (Dopri5::b1 * k1[i] + Dopri5::b3 * k3[i] + Dopri5::b4 * k4[i] +
                                  Dopri5::b5 * k5[i] + Dopri5::b6 * k6[i]);
        rhs(t + h, ynew, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            yerr[i] = h * (Dopri5::e1 * k1[i] + Dopri5::e3 * k3[i] + Dopri5::e4 * k4[i] +
                           Dopri5::e5 * k5[i] + Dopri5::e6 * k6[i] + Dopri5::e7 * k7[i]);
            const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(yerr[i]) / sc);
        }

        ++steps;
        if (err <= 1.0) {
            ++traj.n_accepted;
            const double tnew = t + h;
            if (cfg.record_stride > 0.0) {
                while (next_record <= tnew + 1e-12 * span && next_record < t1 - 1e-12 * span) {
                    const double theta = std::clamp((next_record - t) / h, 0.0, 1.0);
                    detail::hermite(theta, h, y, k1, ynew, k7, yrec);
                    rhs(next_record, yrec, frec);
                    if (record(next_record, yrec, frec)) {
                        traj.terminated_by = Termination::steady_state;
                        return traj;
                    }
                    next_record += cfg.record_stride;
                }
                if (last) {
                    if (record(t1, ynew, k7)) {
                        traj.terminated_by = Termination::steady_state;
                        return traj;
                    }
                }
            } else {
                if (record(tnew, ynew, k7)) {
                    traj.terminated_by = Termination::steady_state;
                    return traj;
                }
            }
            t = tnew;
            std::swap(y, ynew);
            std::swap(k1, k7);  // FSAL
            done = last;
            const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
            h = std::min(h * std::clamp(fac, 0.2, 5.0), hmax);
        } else {
            ++traj.n_rejected;
            const double fac = 0.9 * std::pow(err, -0.2);
            h *= std::clamp(fac, 0.1, 0.9);
        }
    }
    traj.terminated_by = Termination::t_end;
    return traj;
}

// First recorded time at which the rhs sup-norm falls below
// threshold * (sup-norm maximum over the whole trajectory), if any.
inline std::optional<double> detect_steady(const Trajectory& traj, double threshold) {
    if (traj.times.empty()) throw std::invalid_argument("detect_steady: empty trajectory");
    double peak = 0.0;
    for (double n : traj.deriv_norms) peak = std::max(peak, n);
    for (std::size_t i = 0; i < traj.deriv_norms.size(); ++i)
        if (traj.deriv_norms[i] <= threshold * peak) return traj.times[i];
    return std::nullopt;
}

}  // namespace cavcool
