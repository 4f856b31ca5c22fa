#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cavcool/analysis.hpp"
#include "cavcool/covariance.hpp"
#include "cavcool/csv.hpp"
#include "cavcool/integrator.hpp"
#include "cavcool/lindblad.hpp"
#include "cavcool/model.hpp"
#include "cavcool/moments.hpp"

namespace cavcool {

using Json = nlohmann::json;

// configuration problem tied to a specific field; maps to exit code 1
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_name(field) {}
    std::string field_name;
};

enum class ScenarioType { common, individual, dicke_exact, bosonic_oracle };

inline const char* to_string(ScenarioType t) {
    switch (t) {
        case ScenarioType::common: return "common";
        case ScenarioType::individual: return "individual";
        case ScenarioType::dicke_exact: return "dicke-exact";
        case ScenarioType::bosonic_oracle: return "bosonic-oracle";
    }
    return "?";
}

struct InitialConditions {
    double m0 = 0.0;
    std::optional<double> n0, s30, u10, u20, k30;
};

struct FitConfig {
    double tol = 0.05;
    std::optional<FitWindow> window;  // default: window convention from analysis
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::string unit = "kappa";  // declared frequency unit, informational
    PhysicalParams params;
    ScenarioType scenario = ScenarioType::common;
    bool clamp_s3 = false;
    InitialConditions initial;
    int phonon_cutoff = 0;  // exact runs only
    int photon_cutoff = 0;
    double t_end = 60.0;
    IntegratorConfig integrator;
    FitConfig fit;

    void validate() const {
        try {
            params.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("params", e.what());
        }
        if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end", "must be > 0");
        if (!(initial.m0 >= 0.0)) throw ConfigError("initial.m0", "must be >= 0");
        try {
            integrator.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError("integrator", e.what());
        }
        if (!(fit.tol > 0.0)) throw ConfigError("fit.tol", "must be > 0");
        if (scenario == ScenarioType::dicke_exact) {
            if (phonon_cutoff < 2) throw ConfigError("cutoffs.phonon", "required (>= 2) for exact runs");
            if (photon_cutoff < 2) throw ConfigError("cutoffs.photon", "required (>= 2) for exact runs");
            const double rounded = std::round(initial.m0);
            if (std::abs(initial.m0 - rounded) > 1e-9)
                throw ConfigError("initial.m0", "must be an integer Fock level for exact runs");
            if (rounded > phonon_cutoff - 2)
                throw ConfigError("initial.m0",
                                  "raise cutoff: initial Fock level needs phonon cutoff >= m0 + 2");
        }
    }
};

// ---------------- presets ----------------

inline ScenarioConfig preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.params.n_particles = 1'000'000;
    cfg.params.g = 1e-3;
    cfg.params.kappa = 1.0;
    cfg.params.gamma = 0.0;
    cfg.params.eta = 0.1;
    cfg.params.rabi = {5e-3};        // eta * Omega = 5e-4
    cfg.params.trap_freqs = {0.1};
    cfg.integrator.rel_tol = 1e-10;
    cfg.integrator.abs_tol = 1e-12;
    cfg.integrator.record_stride = 0.25;
    if (name == "fig2a") {
        cfg.name = name;
        cfg.scenario = ScenarioType::common;
        cfg.initial.m0 = 1e3;
        cfg.t_end = 60.0;
        return cfg;
    }
    if (name == "fig2b") {
        cfg.name = name;
        cfg.scenario = ScenarioType::individual;
        cfg.clamp_s3 = true;
        cfg.initial.m0 = 1e9;
        cfg.t_end = 160.0;
        return cfg;
    }
    throw ConfigError("preset", "unknown preset '" + name + "' (available: fig2a, fig2b)");
}

// ---------------- JSON I/O ----------------

namespace detail {

template <typename T>
T get_field(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + key, "missing required field");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(where + key, std::string("bad value: ") + e.what());
    }
}

template <typename T>
T get_or(const Json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(where + key, std::string("bad value: ") + e.what());
    }
}

}  // namespace detail

inline ScenarioConfig parse_scenario_config(const Json& j) {
    ScenarioConfig cfg;
    if (j.contains("preset")) cfg = preset(j.at("preset").get<std::string>());
    cfg.name = detail::get_or<std::string>(j, "name", cfg.name, "");
    cfg.unit = detail::get_or<std::string>(j, "unit", cfg.unit, "");

    if (j.contains("params")) {
        const Json& p = j.at("params");
        cfg.params.n_particles =
            detail::get_or<long long>(p, "n_particles", cfg.params.n_particles, "params.");
        cfg.params.g = detail::get_or<double>(p, "g", cfg.params.g, "params.");
        cfg.params.kappa = detail::get_or<double>(p, "kappa", cfg.params.kappa, "params.");
        cfg.params.gamma = detail::get_or<double>(p, "gamma", cfg.params.gamma, "params.");
        cfg.params.eta = detail::get_or<double>(p, "eta", cfg.params.eta, "params.");
        cfg.params.rabi =
            detail::get_or<std::vector<double>>(p, "rabi", cfg.params.rabi, "params.");
        cfg.params.trap_freqs = detail::get_or<std::vector<double>>(
            p, "trap_freqs", cfg.params.trap_freqs, "params.");
    } else if (!j.contains("preset")) {
        throw ConfigError("params", "missing required field");
    }

    if (j.contains("scenario")) {
        const std::string s = j.at("scenario").get<std::string>();
        if (s == "common") cfg.scenario = ScenarioType::common;
        else if (s == "individual") cfg.scenario = ScenarioType::individual;
        else if (s == "dicke-exact") cfg.scenario = ScenarioType::dicke_exact;
        else if (s == "bosonic-oracle") cfg.scenario = ScenarioType::bosonic_oracle;
        else throw ConfigError("scenario", "must be one of common|individual|dicke-exact|bosonic-oracle");
    }
    cfg.clamp_s3 = detail::get_or<bool>(j, "clamp_s3", cfg.clamp_s3, "");

    if (j.contains("initial")) {
        const Json& i = j.at("initial");
        cfg.initial.m0 = detail::get_or<double>(i, "m0", cfg.initial.m0, "initial.");
        auto opt = [&](const char* key) -> std::optional<double> {
            if (!i.contains(key)) return std::nullopt;
            return i.at(key).get<double>();
        };
        cfg.initial.n0 = opt("n");
        cfg.initial.s30 = opt("s3");
        cfg.initial.u10 = opt("u1");
        cfg.initial.u20 = opt("u2");
        cfg.initial.k30 = opt("k3");
    }

    if (j.contains("cutoffs")) {
        const Json& c = j.at("cutoffs");
        cfg.phonon_cutoff = detail::get_or<int>(c, "phonon", cfg.phonon_cutoff, "cutoffs.");
        cfg.photon_cutoff = detail::get_or<int>(c, "photon", cfg.photon_cutoff, "cutoffs.");
    }

    cfg.t_end = detail::get_or<double>(j, "t_end", cfg.t_end, "");

    if (j.contains("integrator")) {
        const Json& g = j.at("integrator");
        cfg.integrator.rel_tol =
            detail::get_or<double>(g, "rel_tol", cfg.integrator.rel_tol, "integrator.");
        cfg.integrator.abs_tol =
            detail::get_or<double>(g, "abs_tol", cfg.integrator.abs_tol, "integrator.");
        cfg.integrator.max_step =
            detail::get_or<double>(g, "max_step", cfg.integrator.max_step, "integrator.");
        cfg.integrator.initial_step =
            detail::get_or<double>(g, "initial_step", cfg.integrator.initial_step, "integrator.");
        cfg.integrator.max_steps =
            detail::get_or<long long>(g, "max_steps", cfg.integrator.max_steps, "integrator.");
        cfg.integrator.record_stride =
            detail::get_or<double>(g, "record_stride", cfg.integrator.record_stride, "integrator.");
        cfg.integrator.steady_threshold = detail::get_or<double>(
            g, "steady_threshold", cfg.integrator.steady_threshold, "integrator.");
    }

    if (j.contains("fit")) {
        const Json& f = j.at("fit");
        cfg.fit.tol = detail::get_or<double>(f, "tol", cfg.fit.tol, "fit.");
        if (f.contains("window")) {
            const auto w = f.at("window").get<std::vector<double>>();
            if (w.size() != 2) throw ConfigError("fit.window", "expected [t_lo, t_hi]");
            cfg.fit.window = FitWindow{w[0], w[1]};
        }
    }

    cfg.validate();
    return cfg;
}

inline Json scenario_to_json(const ScenarioConfig& cfg) {
    Json j;
    j["name"] = cfg.name;
    j["unit"] = cfg.unit;
    j["params"] = {{"n_particles", cfg.params.n_particles}, {"g", cfg.params.g},
                   {"kappa", cfg.params.kappa},             {"gamma", cfg.params.gamma},
                   {"eta", cfg.params.eta},                 {"rabi", cfg.params.rabi},
                   {"trap_freqs", cfg.params.trap_freqs}};
    j["scenario"] = to_string(cfg.scenario);
    j["clamp_s3"] = cfg.clamp_s3;
    j["initial"] = {{"m0", cfg.initial.m0}};
    if (cfg.initial.n0) j["initial"]["n"] = *cfg.initial.n0;
    if (cfg.initial.s30) j["initial"]["s3"] = *cfg.initial.s30;
    if (cfg.initial.u10) j["initial"]["u1"] = *cfg.initial.u10;
    if (cfg.initial.u20) j["initial"]["u2"] = *cfg.initial.u20;
    if (cfg.initial.k30) j["initial"]["k3"] = *cfg.initial.k30;
    if (cfg.phonon_cutoff || cfg.photon_cutoff)
        j["cutoffs"] = {{"phonon", cfg.phonon_cutoff}, {"photon", cfg.photon_cutoff}};
    j["t_end"] = cfg.t_end;
    j["integrator"] = {{"rel_tol", cfg.integrator.rel_tol},
                       {"abs_tol", cfg.integrator.abs_tol},
                       {"max_step", cfg.integrator.max_step},
                       {"initial_step", cfg.integrator.initial_step},
                       {"max_steps", cfg.integrator.max_steps},
                       {"record_stride", cfg.integrator.record_stride},
                       {"steady_threshold", cfg.integrator.steady_threshold}};
    j["fit"] = {{"tol", cfg.fit.tol}};
    if (cfg.fit.window) j["fit"]["window"] = {cfg.fit.window->lo, cfg.fit.window->hi};
    return j;
}

inline Json regime_to_json(const RegimeReport& r) {
    return Json{{"strong_damping_ok", r.strong_damping_ok},
                {"lamb_dicke_ok", r.lamb_dicke_ok},
                {"sideband_ok", r.sideband_ok},
                {"kappa_to_y", r.kappa_to_y},
                {"x_to_gamma", std::isfinite(r.x_to_gamma) ? Json(r.x_to_gamma) : Json("inf")},
                {"all_ok", r.all_ok()}};
}

// ---------------- simulation pipeline ----------------

struct ScenarioResult {
    DerivedCouplings couplings;
    std::vector<MomentState> moments;        // per recorded time
    std::vector<double> trace_residuals;     // exact runs only
    std::vector<double> min_eigenvalues;     // exact runs only
    ComparisonReport report;
    Termination terminated_by = Termination::t_end;
    double min_m = 0.0;  // most negative recorded m; the ODE may undershoot
};

inline MomentState build_initial_state(const ScenarioConfig& cfg) {
    MomentState s = initial_moment_state(cfg.initial.m0, cfg.params.n_particles);
    if (cfg.initial.n0) s.n = *cfg.initial.n0;
    if (cfg.initial.s30) s.s3 = *cfg.initial.s30;
    if (cfg.initial.u10) s.u1 = *cfg.initial.u10;
    if (cfg.initial.u20) s.u2 = *cfg.initial.u20;
    if (cfg.initial.k30) s.k3 = *cfg.initial.k30;
    return s;
}

namespace detail {

inline Trajectory moments_to_trajectory(const std::vector<MomentState>& ms) {
    Trajectory traj;
    for (const MomentState& s : ms) {
        traj.times.push_back(s.t);
        const auto a = s.to_array();
        traj.states.emplace_back(a.begin(), a.end());
        traj.deriv_norms.push_back(0.0);
    }
    return traj;
}

inline ComparisonReport fit_and_compare(const std::vector<MomentState>& ms,
                                        const ScenarioConfig& cfg,
                                        const DerivedCouplings& c, ScenarioKind kind) {
    const Trajectory traj = moments_to_trajectory(ms);
    const FitWindow w =
        cfg.fit.window ? *cfg.fit.window : default_fit_window(traj, 0, c);
    const RateFit fit = fit_exponential_rate(traj, 0, w);
    ComparisonReport rep = compare_to_analytic(fit, c, cfg.params.kappa, kind, cfg.fit.tol);
    rep.scenario = to_string(cfg.scenario);
    return rep;
}

}  // namespace detail

inline ScenarioResult simulate_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioResult res;
    res.couplings = derive_couplings(cfg.params);
    const ScenarioKind kind{
        cfg.scenario == ScenarioType::individual ? Scenario::individual : Scenario::common,
        cfg.clamp_s3};

    switch (cfg.scenario) {
        case ScenarioType::common:
        case ScenarioType::individual: {
            const MomentState s0 = build_initial_state(cfg);
            auto rhs = [&](double t, const std::vector<double>& y, std::vector<double>& dy) {
                const MomentState s = MomentState::from_array(t, y.data());
                const MomentState d = moment_rhs(s, res.couplings, cfg.params, kind);
                const auto a = d.to_array();
                dy.assign(a.begin(), a.end());
            };
            const auto a0 = s0.to_array();
            const Trajectory traj = integrate(rhs, {a0.begin(), a0.end()}, 0.0, cfg.t_end,
                                              cfg.integrator);
            res.terminated_by = traj.terminated_by;
            for (std::size_t i = 0; i < traj.size(); ++i)
                res.moments.push_back(
                    MomentState::from_array(traj.times[i], traj.states[i].data()));
            break;
        }
        case ScenarioType::dicke_exact: {
            ProductBasis basis{cfg.params.n_particles, cfg.phonon_cutoff, cfg.photon_cutoff,
                               ModeLayout::common};
            basis.validate();
            const SparseOp h = build_hamiltonian_common(basis, res.couplings);
            const SparseOp c_op = photon_lowering(basis);
            DensityMatrix rho0;
            rho0.rho = Matrix::Zero(basis.dim(), basis.dim());
            const long long idx =
                basis.index_common(0, static_cast<int>(std::llround(cfg.initial.m0)), 0);
            rho0.rho(idx, idx) = 1.0;
            const auto states = propagate_rho(rho0, h, c_op, cfg.params.kappa, 0.0, cfg.t_end,
                                              cfg.integrator, basis);
            for (const DensityMatrix& st : states) {
                res.moments.push_back(extract_moments(st, basis));
                const RhoDiagnostics d = diagnose(st, basis);
                res.trace_residuals.push_back(d.trace_residual);
                res.min_eigenvalues.push_back(d.min_eigenvalue);
            }
            break;
        }
        case ScenarioType::bosonic_oracle: {
            const CovarianceState m0 =
                moments_to_covariance(build_initial_state(cfg), cfg.params.n_particles);
            const Eigen::Matrix3cd k = bosonic_drift(res.couplings, cfg.params.kappa);
            const auto states =
                propagate_covariance(m0, k, 0.0, cfg.t_end, cfg.integrator);
            for (const CovarianceState& st : states)
                res.moments.push_back(covariance_to_moments(st, cfg.params.n_particles));
            break;
        }
    }

    res.min_m = 0.0;
    for (const MomentState& s : res.moments) res.min_m = std::min(res.min_m, s.m);
    res.report = detail::fit_and_compare(res.moments, cfg, res.couplings, kind);
    return res;
}

// ---------------- artifacts ----------------

struct RunArtifacts {
    int exit_code = 0;
    ComparisonReport report;
    std::string csv_path;
    std::string json_path;
};

inline Json report_to_json(const ScenarioConfig& cfg, const DerivedCouplings& c,
                           const ComparisonReport& rep) {
    Json j;
    j["scenario"] = to_string(cfg.scenario);
    j["name"] = cfg.name;
    j["unit"] = cfg.unit;
    j["x"] = c.x;
    j["y"] = c.y;
    j["kappa"] = cfg.params.kappa;
    j["analytic_rate"] = rep.analytic_rate;
    j["fitted"] = {{"rate", rep.fit.rate},
                   {"intercept", rep.fit.intercept},
                   {"window", {rep.fit.window.lo, rep.fit.window.hi}},
                   {"residual_rms", rep.fit.residual_rms},
                   {"n_points", rep.fit.n_points}};
    j["relative_error"] = rep.relative_error;
    j["transient_time"] = rep.transient_time;
    j["tolerance"] = rep.tolerance;
    j["pass"] = rep.pass;
    if (!rep.note.empty()) j["note"] = rep.note;
    j["regime"] = regime_to_json(check_regime(cfg.params));
    return j;
}

inline RunArtifacts run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const ScenarioResult res = simulate_scenario(cfg);

    RunArtifacts art;
    art.report = res.report;
    art.csv_path = (fs::path(out_dir) / (cfg.name + "_trajectory.csv")).string();
    art.json_path = (fs::path(out_dir) / (cfg.name + "_report.json")).string();

    const bool exact = cfg.scenario == ScenarioType::dicke_exact;
    const double rate = res.report.analytic_rate;
    const double m0 = res.moments.empty() ? 0.0 : res.moments.front().m;

    CsvWriter csv(art.csv_path);
    std::vector<std::string> cols = {"t", "m", "n", "s3", "u1", "u2", "k3", "Q", "m_analytic"};
    if (exact) {
        cols.push_back("trace_residual");
        cols.push_back("min_eigenvalue");
    }
    csv.header(cols);
    for (std::size_t i = 0; i < res.moments.size(); ++i) {
        const MomentState& s = res.moments[i];
        const double q = res.couplings.y > 0.0
                             ? conserved_q(s, res.couplings)
                             : std::numeric_limits<double>::quiet_NaN();
        std::vector<double> row = {s.t, s.m,  s.n, s.s3, s.u1, s.u2, s.k3, q,
                                   analytic_m(s.t, m0, rate)};
        if (exact) {
            row.push_back(res.trace_residuals[i]);
            row.push_back(res.min_eigenvalues[i]);
        }
        csv.row(row);
    }

    Json j = report_to_json(cfg, res.couplings, res.report);
    if (res.min_m < 0.0) {
        j["m_min"] = res.min_m;
        j["note_m"] = "m undershoots zero; reported unclipped";
    }
    std::ofstream(art.json_path) << j.dump(2) << "\n";

    art.exit_code = res.report.pass ? 0 : 2;
    return art;
}

// Formula-only evaluation: couplings, predicted rates, regime report.
inline Json rates_payload(const ScenarioConfig& cfg) {
    cfg.validate();
    const DerivedCouplings c = derive_couplings(cfg.params);
    Json j;
    j["x"] = c.x;
    j["y"] = c.y;
    j["omega"] = c.omega_eff;
    j["rate_common"] = c.y > 0.0 ? analytic_rate_common(c, cfg.params.kappa) : 0.0;
    j["rate_individual"] = c.y > 0.0 ? analytic_rate_individual(c, cfg.params.kappa) : 0.0;
    j["regime"] = regime_to_json(check_regime(cfg.params));
    return j;
}

// Runs the clamped common-mode moment ODE against the bosonic covariance
// oracle from the same initial data, on a shared record grid. Reports
// per-moment maximum deviations (scaled by the oracle's peak magnitude),
// both fitted rates, and the closed-form matrix-exponential residual.
inline Json oracle_compare(const ScenarioConfig& cfg_in, const std::string& out_dir) {
    namespace fs = std::filesystem;
    ScenarioConfig cfg = cfg_in;
    cfg.scenario = ScenarioType::common;
    cfg.clamp_s3 = true;
    if (cfg.integrator.record_stride <= 0.0) cfg.integrator.record_stride = 0.25;
    cfg.validate();

    const ScenarioResult ode = simulate_scenario(cfg);

    ScenarioConfig ocfg = cfg;
    ocfg.scenario = ScenarioType::bosonic_oracle;
    const ScenarioResult oracle = simulate_scenario(ocfg);

    const std::size_t npts = std::min(ode.moments.size(), oracle.moments.size());
    std::array<double, 6> max_dev{}, scale{};
    for (std::size_t i = 0; i < npts; ++i) {
        const auto a = ode.moments[i].to_array();
        const auto b = oracle.moments[i].to_array();
        for (std::size_t k = 0; k < 6; ++k) {
            max_dev[k] = std::max(max_dev[k], std::abs(a[k] - b[k]));
            scale[k] = std::max(scale[k], std::abs(b[k]));
        }
    }

    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / (cfg.name + "_oracle_compare.csv")).string();
    CsvWriter csv(csv_path);
    std::vector<std::string> cols = {"t"};
    for (const char* nm : kMomentNames) cols.push_back(std::string(nm) + "_ode");
    for (const char* nm : kMomentNames) cols.push_back(std::string(nm) + "_oracle");
    csv.header(cols);
    for (std::size_t i = 0; i < npts; ++i) {
        std::vector<double> row = {ode.moments[i].t};
        const auto a = ode.moments[i].to_array();
        const auto b = oracle.moments[i].to_array();
        row.insert(row.end(), a.begin(), a.end());
        row.insert(row.end(), b.begin(), b.end());
        csv.row(row);
    }

    // closed-form cross-check of the covariance propagation at t_end
    const Eigen::Matrix3cd k = bosonic_drift(ode.couplings, cfg.params.kappa);
    const CovarianceState m0 = moments_to_covariance(build_initial_state(cfg),
                                                     cfg.params.n_particles);
    const auto cov_states = propagate_covariance(m0, k, 0.0, cfg.t_end, cfg.integrator);
    const Eigen::Matrix3cd closed = covariance_closed_form(m0.m, k, cfg.t_end);
    const double closed_residual =
        (cov_states.back().m - closed).cwiseAbs().maxCoeff() /
        std::max(closed.cwiseAbs().maxCoeff(), 1e-300);

    Json j;
    j["name"] = cfg.name;
    j["x"] = ode.couplings.x;
    j["y"] = ode.couplings.y;
    j["kappa"] = cfg.params.kappa;
    j["t_end"] = cfg.t_end;
    j["analytic_rate"] = ode.report.analytic_rate;
    j["oracle_slow_rate"] = covariance_slow_rate(k);
    j["moment_ode_fitted_rate"] = ode.report.fit.rate;
    j["oracle_fitted_rate"] = oracle.report.fit.rate;
    j["matrix_exp_rel_residual"] = closed_residual;
    for (std::size_t i = 0; i < 6; ++i) {
        j["max_abs_dev"][kMomentNames[i]] = max_dev[i];
        j["max_rel_dev"][kMomentNames[i]] =
            scale[i] > 0.0 ? max_dev[i] / scale[i] : 0.0;
    }
    j["csv"] = csv_path;
    const std::string json_path = (fs::path(out_dir) / (cfg.name + "_oracle_compare.json")).string();
    std::ofstream(json_path) << j.dump(2) << "\n";
    j["json"] = json_path;
    return j;
}

}  // namespace cavcool
