#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "cavcool/scenario.hpp"

namespace cavcool {

// One swept parameter: a JSON pointer into the scenario config plus the
// values it takes, e.g. {"path": "/params/rabi/0", "values": [...]}.
struct SweepAxis {
    std::string path;
    std::vector<double> values;
};

struct SweepSpec {
    Json base;                    // scenario config as JSON (preset-expanded)
    std::vector<SweepAxis> axes;  // one or two axes
    int jobs = 1;
};

inline SweepSpec parse_sweep_spec(const Json& j) {
    SweepSpec spec;
    if (!j.contains("base")) throw ConfigError("base", "missing required field");
    spec.base = scenario_to_json(parse_scenario_config(j.at("base")));
    if (!j.contains("sweep")) throw ConfigError("sweep", "missing required field");
    for (const Json& a : j.at("sweep")) {
        SweepAxis axis;
        axis.path = detail::get_field<std::string>(a, "path", "sweep.");
        axis.values = detail::get_field<std::vector<double>>(a, "values", "sweep.");
        if (axis.values.empty()) throw ConfigError("sweep.values", "must be non-empty");
        spec.axes.push_back(std::move(axis));
    }
    if (spec.axes.empty() || spec.axes.size() > 2)
        throw ConfigError("sweep", "expected one or two swept parameters");
    spec.jobs = detail::get_or<int>(j, "jobs", 1, "");
    if (spec.jobs < 1) throw ConfigError("jobs", "must be >= 1");
    // every axis must point at an existing numeric field of the base config
    for (const SweepAxis& axis : spec.axes) {
        try {
            const Json::json_pointer ptr(axis.path);
            if (!spec.base.contains(ptr) || !spec.base.at(ptr).is_number())
                throw ConfigError("sweep.path",
                                  "'" + axis.path + "' does not name a numeric config field");
        } catch (const Json::exception&) {
            throw ConfigError("sweep.path", "'" + axis.path + "' is not a valid JSON pointer");
        }
    }
    return spec;
}

inline int effective_jobs(int requested) {
    int jobs = std::max(1, requested);
    if (const char* env = std::getenv("CAVCOOL_JOBS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) jobs = std::min(jobs, cap);
    }
    return jobs;
}

struct SweepRow {
    std::vector<double> axis_values;
    double x = 0.0, y = 0.0;
    double fitted_rate = 0.0, analytic_rate = 0.0, relative_error = 0.0;
    bool failed = false;
    std::string status = "ok";
};

// Runs the grid (lexicographic over axes, first axis outermost) and writes
// one CSV row per point. Points run in parallel up to the configured degree;
// the aggregate row order is the grid order regardless of completion order.
// Exit code 2 when any point failed hard, else 0.
inline int run_sweep(const SweepSpec& spec, const std::string& out_dir) {
    namespace fs = std::filesystem;
    const std::size_t n0 = spec.axes[0].values.size();
    const std::size_t n1 = spec.axes.size() == 2 ? spec.axes[1].values.size() : 1;
    const std::size_t total = n0 * n1;

    std::vector<SweepRow> rows(total);
    std::atomic<std::size_t> next{0};
    const int jobs = effective_jobs(spec.jobs);

    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= total) return;
            SweepRow& row = rows[idx];
            const std::size_t i0 = idx / n1, i1 = idx % n1;
            row.axis_values.push_back(spec.axes[0].values[i0]);
            if (spec.axes.size() == 2) row.axis_values.push_back(spec.axes[1].values[i1]);
            try {
                Json point = spec.base;
                point[Json::json_pointer(spec.axes[0].path)] = spec.axes[0].values[i0];
                if (spec.axes.size() == 2)
                    point[Json::json_pointer(spec.axes[1].path)] = spec.axes[1].values[i1];
                const ScenarioConfig cfg = parse_scenario_config(point);
                const ScenarioResult res = simulate_scenario(cfg);
                row.x = res.couplings.x;
                row.y = res.couplings.y;
                row.fitted_rate = res.report.fit.rate;
                row.analytic_rate = res.report.analytic_rate;
                row.relative_error = res.report.relative_error;
            } catch (const std::exception& e) {
                row.failed = true;
                row.status = std::string("failed: ") + e.what();
                row.x = row.y = row.fitted_rate = row.analytic_rate = row.relative_error =
                    std::numeric_limits<double>::quiet_NaN();
            }
        }
    };

    if (jobs == 1 || total == 1) {
        worker();
    } else {
        const int nthreads = static_cast<int>(std::min<std::size_t>(jobs, total));
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();
    }

    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / "sweep.csv").string();
    CsvWriter csv(csv_path);
    std::vector<std::string> cols;
    for (const SweepAxis& a : spec.axes) cols.push_back(a.path);
    for (const char* c : {"x", "y", "fitted_rate", "analytic_rate", "rel_error", "status"})
        cols.emplace_back(c);
    csv.header(cols);
    bool any_failed = false;
    for (const SweepRow& row : rows) {
        any_failed = any_failed || row.failed;
        std::vector<std::string> fields;
        for (double v : row.axis_values) fields.push_back(CsvWriter::format(v));
        for (double v : {row.x, row.y, row.fitted_rate, row.analytic_rate, row.relative_error})
            fields.push_back(CsvWriter::format(v));
        fields.push_back(row.status);
        csv.row(fields);
    }
    return any_failed ? 2 : 0;
}

}  // namespace cavcool
