#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "cavcool/integrator.hpp"

using namespace cavcool;

namespace {

auto decay = [](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy = {-y[0]};
};

auto oscillator = [](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy = {y[1], -y[0]};
};

}  // namespace

TEST_CASE("integrate solves smooth problems to tolerance") {
    SECTION("exponential decay endpoint") {
        IntegratorConfig cfg;
        cfg.rel_tol = 1e-9;
        cfg.abs_tol = 1e-12;
        const Trajectory t = integrate(decay, {1.0}, 0.0, 1.0, cfg);
        REQUIRE(t.terminated_by == Termination::t_end);
        CHECK(t.states.back()[0] ==
              Catch::Approx(std::exp(-1.0)).epsilon(10.0 * cfg.rel_tol));
    }
    SECTION("harmonic oscillator returns after one period") {
        IntegratorConfig cfg;
        cfg.rel_tol = 1e-10;
        cfg.abs_tol = 1e-12;
        const Trajectory t = integrate(oscillator, {1.0, 0.0}, 0.0, 2.0 * M_PI, cfg);
        CHECK(t.states.back()[0] == Catch::Approx(1.0).margin(1e-8));
        CHECK(t.states.back()[1] == Catch::Approx(0.0).margin(1e-8));
    }
    SECTION("halving rel_tol moves the endpoint by less than the coarser tolerance") {
        IntegratorConfig coarse;
        coarse.rel_tol = 1e-6;
        coarse.abs_tol = 1e-9;
        IntegratorConfig fine = coarse;
        fine.rel_tol = 5e-7;
        const double a = integrate(decay, {1.0}, 0.0, 1.0, coarse).states.back()[0];
        const double b = integrate(decay, {1.0}, 0.0, 1.0, fine).states.back()[0];
        CHECK(std::abs(a - b) < coarse.rel_tol);
    }
}

TEST_CASE("integration is deterministic") {
    IntegratorConfig cfg;
    cfg.record_stride = 0.1;
    const Trajectory a = integrate(oscillator, {1.0, 0.0}, 0.0, 10.0, cfg);
    const Trajectory b = integrate(oscillator, {1.0, 0.0}, 0.0, 10.0, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.times[i] == b.times[i]);
        CHECK(a.states[i] == b.states[i]);
    }
}

TEST_CASE("record stride sampling") {
    IntegratorConfig cfg;
    cfg.record_stride = 0.25;
    const Trajectory t = integrate(decay, {1.0}, 0.0, 1.0, cfg);
    REQUIRE(t.size() == 5);  // 0, .25, .5, .75, 1
    CHECK(t.times.front() == 0.0);
    CHECK(t.times[1] == Catch::Approx(0.25));
    CHECK(t.times.back() == 1.0);
    // interpolated samples follow the exact solution
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(t.states[i][0] == Catch::Approx(std::exp(-t.times[i])).epsilon(1e-7));
}

TEST_CASE("termination taxonomy") {
    SECTION("step limit") {
        IntegratorConfig cfg;
        cfg.max_steps = 3;
        const Trajectory t = integrate(oscillator, {1.0, 0.0}, 0.0, 100.0, cfg);
        CHECK(t.terminated_by == Termination::step_limit);
    }
    SECTION("steady state stops a decaying run early") {
        IntegratorConfig cfg;
        cfg.steady_threshold = 1e-6;
        cfg.record_stride = 0.5;
        const Trajectory t = integrate(decay, {1.0}, 0.0, 40.0, cfg);
        CHECK(t.terminated_by == Termination::steady_state);
        CHECK(t.times.back() < 20.0);  // |rhs| = e^-t crosses 1e-6 near t = 13.8
        CHECK(t.times.back() > 10.0);
    }
    SECTION("step-size underflow reports the failure time") {
        auto blowup = [](double, const std::vector<double>& y, std::vector<double>& dy) {
            dy = {y[0] * y[0]};  // y(t) = 1/(1-t), singular at t = 1
        };
        IntegratorConfig cfg;
        cfg.max_steps = 1'000'000;
        CHECK_THROWS_WITH(integrate(blowup, {1.0}, 0.0, 2.0, cfg),
                          Catch::Matchers::ContainsSubstring("underflow"));
    }
}

TEST_CASE("detect_steady on recorded trajectories") {
    SECTION("constant trajectory: first time point") {
        auto zero = [](double, const std::vector<double>&, std::vector<double>& dy) {
            dy = {0.0};
        };
        const Trajectory t = integrate(zero, {1.0}, 0.0, 1.0, {});
        const auto when = detect_steady(t, 1e-6);
        REQUIRE(when.has_value());
        CHECK(*when == 0.0);
    }
    SECTION("strictly growing derivative norm: none") {
        auto grow = [](double, const std::vector<double>& y, std::vector<double>& dy) {
            dy = {y[0]};
        };
        IntegratorConfig cfg;
        cfg.record_stride = 0.1;
        const Trajectory t = integrate(grow, {1.0}, 0.0, 3.0, cfg);
        CHECK_FALSE(detect_steady(t, 1e-6).has_value());
    }
    SECTION("empty trajectory is an error") {
        CHECK_THROWS_AS(detect_steady(Trajectory{}, 0.1), std::invalid_argument);
    }
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(integrate(decay, {1.0}, 1.0, 1.0, {}), std::invalid_argument);
    IntegratorConfig bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate(decay, {1.0}, 0.0, 1.0, bad), std::invalid_argument);
    CHECK_THROWS_AS(integrate(decay, {std::nan("")}, 0.0, 1.0, {}), std::invalid_argument);
}
