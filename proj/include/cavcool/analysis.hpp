#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cavcool/integrator.hpp"
#include "cavcool/model.hpp"
#include "cavcool/moments.hpp"

namespace cavcool {

struct FitWindow {
    double lo = 0.0;
    double hi = 0.0;
};

struct RateFit {
    double rate = 0.0;       // |slope| of the least-squares line through (t, ln value)
    double intercept = 0.0;  // intercept of that line
    FitWindow window;        // actual [first, last] sample times used
    double residual_rms = 0.0;
    std::size_t n_points = 0;
};

// Ordinary least squares on (t, ln value) over the window. The column must be
// strictly positive inside the window and contribute at least 8 samples.
inline RateFit fit_exponential_rate(const Trajectory& traj, std::size_t column,
                                    FitWindow window) {
    if (!(window.hi > window.lo))
        throw std::invalid_argument("fit_exponential_rate: window must have t_hi > t_lo");
    std::vector<double> ts, ls;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double t = traj.times[i];
        if (t < window.lo || t > window.hi) continue;
        const double v = traj.states[i].at(column);
        if (!(v > 0.0))
            throw std::domain_error("fit_exponential_rate: non-positive value at t = " +
                                    std::to_string(t) + ", log undefined");
        ts.push_back(t);
        ls.push_back(std::log(v));
    }
    if (ts.size() < 8)
        throw std::invalid_argument("fit_exponential_rate: fewer than 8 points in window");

    const std::size_t n = ts.size();
    double tbar = 0.0, lbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        tbar += ts[i];
        lbar += ls[i];
    }
    tbar /= n;
    lbar /= n;
    double stt = 0.0, stl = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        stt += (ts[i] - tbar) * (ts[i] - tbar);
        stl += (ts[i] - tbar) * (ls[i] - lbar);
    }
    const double slope = stl / stt;
    const double intercept = lbar - slope * tbar;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ls[i] - (intercept + slope * ts[i]);
        ss += r * r;
    }
    RateFit fit;
    fit.rate = std::abs(slope);
    fit.intercept = intercept;
    fit.window = {ts.front(), ts.back()};
    fit.residual_rms = std::sqrt(ss / n);
    fit.n_points = n;
    return fit;
}

// Default window convention: start after the collective transient at
// t_lo = 10/min(x, y); end where the column has dropped by a factor e^3 from
// its initial value, or at the trajectory end, whichever is earlier.
inline FitWindow default_fit_window(const Trajectory& traj, std::size_t column,
                                    const DerivedCouplings& c) {
    if (traj.times.empty()) throw std::invalid_argument("default_fit_window: empty trajectory");
    const double fastest = std::min(c.x, c.y);
    if (!(fastest > 0.0))
        throw std::domain_error("default_fit_window: needs x > 0 and y > 0");
    FitWindow w;
    w.lo = 10.0 / fastest;
    w.hi = traj.times.back();
    const double v0 = traj.states.front().at(column);
    const double floor = v0 * std::exp(-3.0);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.states[i].at(column) <= floor) {
            w.hi = traj.times[i];
            break;
        }
    }
    return w;
}

struct ComparisonReport {
    std::string scenario;
    RateFit fit;
    double analytic_rate = 0.0;
    double relative_error = 0.0;
    double transient_time = 0.0;  // window-start convention, 10/min(x, y)
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

inline ComparisonReport compare_to_analytic(const RateFit& fit, const DerivedCouplings& c,
                                            double kappa, const ScenarioKind& kind,
                                            double tol) {
    ComparisonReport r;
    r.scenario = kind.tag == Scenario::common ? "common" : "individual";
    r.fit = fit;
    r.analytic_rate = kind.tag == Scenario::common ? analytic_rate_common(c, kappa)
                                                   : analytic_rate_individual(c, kappa);
    r.tolerance = tol;
    const double fastest = std::min(c.x, c.y);
    r.transient_time = fastest > 0.0 ? 10.0 / fastest : 0.0;
    if (r.analytic_rate > 0.0) {
        r.relative_error = std::abs(fit.rate - r.analytic_rate) / r.analytic_rate;
        r.pass = r.relative_error <= tol;
    } else {
        // zero predicted rate: pass only for a numerically zero fit
        r.relative_error = fit.rate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        r.pass = std::abs(fit.rate) <= 1e-12;
        r.note = r.pass ? "analytic rate is zero; fitted rate negligible"
                        : "analytic rate is zero but fitted rate is not";
    }
    return r;
}

}  // namespace cavcool
