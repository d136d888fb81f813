#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "odegrad/solver.hpp"

using namespace odegrad;
using odegrad::testing::ConstantDynamics;
using odegrad::testing::EvalCounter;

namespace {

// degree-n Taylor polynomial of exp at h — independent oracle for f = z steps
double taylor_exp(double h, int order) {
    double s = 1.0, term = 1.0;
    for (int k = 1; k <= order; ++k) {
        term *= h / k;
        s += term;
    }
    return s;
}

} // namespace

TEST_CASE("tableau catalog satisfies consistency invariants") {
    for (const auto& name : tableaus::names()) {
        ButcherTableau tb = tableaus::by_name(name);
        CHECK_NOTHROW(tb.validate());
    }
    ButcherTableau dp = tableaus::dormand_prince_45();
    CHECK(dp.stages == 7);
    CHECK(dp.fsal);
    CHECK(dp.adaptive());
    CHECK_FALSE(tableaus::rk4().adaptive());
    CHECK_THROWS_AS((void)tableaus::by_name("rk999"), OdeError);
}

TEST_CASE("step: zero dynamics leaves the state unchanged") {
    ConstantDynamics zero({0.0, 0.0});
    for (const auto& name : tableaus::names()) {
        ButcherTableau tb = tableaus::by_name(name);
        auto out = step(tb, zero, 0.0, {1.5, -2.0}, {}, 0.3, 1e-6, 1e-3);
        CHECK(out.z_new == StateVector{1.5, -2.0});
        CHECK(out.err_norm == 0.0);
    }
}

TEST_CASE("step: explicit Euler on f = kz") {
    auto dyn = linear_dynamics(1.0);
    auto out = step(tableaus::euler(), *dyn, 0.0, {1.0}, {1.0}, 0.1, 1e-6, 1e-3);
    CHECK(out.z_new[0] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(out.f_evals == 1);
}

TEST_CASE("step: classical RK4 reproduces the degree-4 Taylor polynomial") {
    auto dyn = linear_dynamics(1.0);
    auto out = step(tableaus::rk4(), *dyn, 0.0, {1.0}, {1.0}, 0.1, 1e-6, 1e-3);
    CHECK(out.z_new[0] == doctest::Approx(taylor_exp(0.1, 4)).epsilon(1e-14));
}

TEST_CASE("step: Dopri5 is within 1e-9 of exp(0.1)") {
    auto dyn = linear_dynamics(1.0);
    auto out = step(tableaus::dormand_prince_45(), *dyn, 0.0, {1.0}, {1.0}, 0.1, 1e-6, 1e-3);
    CHECK(std::abs(out.z_new[0] - 1.1051709180756477) < 1e-9);
    CHECK(out.f_evals == 7);
    CHECK(out.stage_derivs.size() == 7);
}

TEST_CASE("error_norm examples") {
    CHECK(error_norm({0.0, 0.0}, {1.0, 2.0}, {1.0, 2.0}, 1e-3, 1e-3) == 0.0);
    CHECK(error_norm({0.001}, {0.0}, {0.0}, 1e-3, 1e-3) == doctest::Approx(1.0).epsilon(1e-15));
    const double base = error_norm({0.01, -0.02}, {1.0, -1.0}, {1.1, -0.9}, 1e-6, 1e-4);
    const double twice = error_norm({0.02, -0.04}, {1.0, -1.0}, {1.1, -0.9}, 1e-6, 1e-4);
    CHECK(twice == doctest::Approx(2.0 * base).epsilon(1e-14));
}

TEST_CASE("propose_step controller branches") {
    SolverConfig cfg;
    CHECK(propose_step(1.0, 0.5, 4, cfg, 1e-12) == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(propose_step(0.0, 0.5, 4, cfg, 1e-12) == doctest::Approx(5.0).epsilon(1e-15));
    // err = 2^(p+1) makes the interior factor exactly safety/2
    CHECK(propose_step(32.0, 1.0, 4, cfg, 1e-12) == doctest::Approx(0.45).epsilon(1e-15));
    // clamps
    CHECK(propose_step(1e12, 1.0, 1, cfg, 1e-12) == doctest::Approx(cfg.min_factor));
    CHECK(propose_step(1e-12, 1.0, 1, cfg, 1e-12) == doctest::Approx(cfg.max_factor));
    // sign is preserved for reverse-time stepping
    CHECK(propose_step(1.0, -0.5, 4, cfg, 1e-12) == doctest::Approx(-0.45).epsilon(1e-15));
    CHECK_THROWS_AS((void)propose_step(1e30, 1e-10, 1, cfg, 1e-10), OdeError);
}

TEST_CASE("initial_step heuristic") {
    SolverConfig cfg;
    cfg.rtol = 1e-5;
    cfg.atol = 1e-5;
    ConstantDynamics zero({0.0});
    CHECK(initial_step(zero, 0.0, {1.0}, {}, 3.0, 4, cfg) == 3.0);

    auto dyn = linear_dynamics(1.0);
    const double h = initial_step(*dyn, 0.0, {1.0}, {1.0}, 1.0, 4, cfg);
    CHECK(h > 0.0);
    CHECK(h < 1.0);
}

TEST_CASE("integrate: explicit h_init bypasses the heuristic") {
    ConstantDynamics c({2.0});
    SolverConfig cfg;
    cfg.h_init = 0.125;
    auto res = integrate(c, {0.5}, {}, 0.0, 1.0, tableaus::dormand_prince_45(), cfg);
    CHECK(res.cache.time_points[1] - res.cache.time_points[0] == 0.125);
}

TEST_CASE("integrate: Euler is exact for constant dynamics") {
    ConstantDynamics c({2.0});
    SolverConfig cfg;
    cfg.fixed_steps = 4;
    auto res = integrate(c, {0.5}, {}, 0.0, 1.0, tableaus::euler(), cfg);
    CHECK(res.z_final[0] == 2.5); // dyadic values: exact
    CHECK(res.cache.accepted_steps == 4);
    CHECK(res.cache.time_points.back() == 1.0);
}

TEST_CASE("integrate: adaptive Dopri5 hits exp(1) within 1e-4 at tol 1e-5") {
    auto dyn = linear_dynamics(1.0);
    SolverConfig cfg;
    cfg.rtol = 1e-5;
    cfg.atol = 1e-5;
    auto res = integrate(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(), cfg);
    CHECK(std::abs(res.z_final[0] - 2.718281828459045) < 1e-4);
    CHECK(res.cache.time_points.front() == 0.0);
    CHECK(res.cache.time_points.back() == 1.0);
}

TEST_CASE("integrate: halving tolerances never increases the linear-problem error") {
    // starts past the 2-step resolution floor, where the controller tracks tol
    auto dyn = linear_dynamics(1.0);
    double tol = 2.5e-4;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 12; ++k) {
        SolverConfig cfg;
        cfg.rtol = tol;
        cfg.atol = tol;
        auto res = integrate(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(), cfg);
        const double err = std::abs(res.z_final[0] - 2.718281828459045);
        CHECK(err <= prev);
        prev = err;
        tol *= 0.5;
    }
}

TEST_CASE("integrate: cache invariants on a van der Pol run") {
    auto dyn = van_der_pol_dynamics();
    SolverConfig cfg;
    cfg.rtol = 1e-6;
    cfg.atol = 1e-8;
    auto res = integrate(*dyn, {2.0, 0.0}, {}, 0.0, 10.0, tableaus::dormand_prince_45(), cfg);
    const auto& tp = res.cache.time_points;
    REQUIRE(tp.size() == res.cache.z_values.size());
    CHECK(tp.front() == 0.0);
    CHECK(tp.back() == 10.0);
    for (std::size_t i = 1; i < tp.size(); ++i) CHECK(tp[i] > tp[i - 1]);
    CHECK(res.cache.z_values.front() == StateVector{2.0, 0.0});
    CHECK(res.cache.accepted_steps + 1 == static_cast<long>(tp.size()));
    CHECK(res.cache.rejected_steps >= 0);
}

TEST_CASE("integrate: identical inputs give bitwise-identical results") {
    auto dyn = van_der_pol_dynamics();
    SolverConfig cfg;
    cfg.rtol = 1e-7;
    cfg.atol = 1e-7;
    auto a = integrate(*dyn, {2.0, 0.0}, {}, 0.0, 5.0, tableaus::dormand_prince_45(), cfg);
    auto b = integrate(*dyn, {2.0, 0.0}, {}, 0.0, 5.0, tableaus::dormand_prince_45(), cfg);
    REQUIRE(a.cache.time_points.size() == b.cache.time_points.size());
    for (std::size_t i = 0; i < a.cache.time_points.size(); ++i) {
        CHECK(a.cache.time_points[i] == b.cache.time_points[i]);
        CHECK(bitwise_equal(a.cache.z_values[i], b.cache.z_values[i]));
    }
}

TEST_CASE("integrate: f-eval accounting matches the stage count") {
    auto dyn = van_der_pol_dynamics();

    SUBCASE("FSAL tableau: (s-1)(accepted+rejected) + 1") {
        EvalCounter counted(*dyn);
        SolverConfig cfg;
        cfg.rtol = 1e-6;
        cfg.atol = 1e-6;
        cfg.h_init = 0.05; // no startup heuristic evals
        auto res = integrate(counted, {2.0, 0.0}, {}, 0.0, 10.0, tableaus::dormand_prince_45(), cfg);
        const long trials = res.cache.accepted_steps + res.cache.rejected_steps;
        CHECK(res.cache.total_f_evals == 6 * trials + 1);
        CHECK(counted.count == res.cache.total_f_evals);
    }

    SUBCASE("non-FSAL pair: s*accepted + (s-1)*rejected") {
        EvalCounter counted(*dyn);
        SolverConfig cfg;
        cfg.rtol = 1e-4;
        cfg.atol = 1e-4;
        cfg.h_init = 0.05;
        auto res = integrate(counted, {2.0, 0.0}, {}, 0.0, 10.0, tableaus::heun_euler_12(), cfg);
        CHECK(res.cache.total_f_evals ==
              2 * res.cache.accepted_steps + 1 * res.cache.rejected_steps);
        CHECK(counted.count == res.cache.total_f_evals);
    }

    SUBCASE("automatic h_init adds exactly the two heuristic evaluations") {
        EvalCounter counted(*dyn);
        SolverConfig cfg;
        cfg.rtol = 1e-6;
        cfg.atol = 1e-6;
        auto res = integrate(counted, {2.0, 0.0}, {}, 0.0, 10.0, tableaus::dormand_prince_45(), cfg);
        CHECK(counted.count == res.cache.total_f_evals + 2);
    }
}

TEST_CASE("integrate: reverse-time constant dynamics return to the start") {
    ConstantDynamics c({2.0});
    SolverConfig cfg;
    cfg.h_init = 0.25;
    auto fwd = integrate(c, {0.5}, {}, 0.0, 1.0, tableaus::euler(), cfg);
    CHECK(fwd.z_final[0] == 2.5);
    auto rev = integrate(c, fwd.z_final, {}, 1.0, 0.0, tableaus::euler(), cfg);
    CHECK(rev.z_final[0] == 0.5);
    CHECK(rev.cache.time_points.back() == 0.0);
}

TEST_CASE("integrate: error conditions") {
    SUBCASE("T == t0") {
        ConstantDynamics c({1.0});
        SolverConfig cfg;
        CHECK_THROWS_AS((void)integrate(c, {0.0}, {}, 1.0, 1.0, tableaus::euler(), cfg), OdeError);
    }
    SUBCASE("fixed-step tableau without a step policy") {
        ConstantDynamics c({1.0});
        SolverConfig cfg;
        CHECK_THROWS_AS((void)integrate(c, {0.0}, {}, 0.0, 1.0, tableaus::euler(), cfg), OdeError);
    }
    SUBCASE("stepsize underflow near a blow-up") {
        odegrad::testing::QuadraticBlowupDynamics blowup;
        SolverConfig cfg;
        cfg.rtol = 1e-6;
        cfg.atol = 1e-6;
        try {
            (void)integrate(blowup, {1.0}, {}, 0.0, 2.0, tableaus::dormand_prince_45(), cfg);
            FAIL("expected an error");
        } catch (const OdeError& e) {
            CHECK(e.code() == ErrorCode::StepUnderflow);
        }
    }
    SUBCASE("max accepted steps") {
        auto dyn = linear_dynamics(1.0);
        SolverConfig cfg;
        cfg.rtol = 1e-10;
        cfg.atol = 1e-10;
        cfg.max_steps = 3;
        try {
            (void)integrate(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(), cfg);
            FAIL("expected an error");
        } catch (const OdeError& e) {
            CHECK(e.code() == ErrorCode::MaxStepsExceeded);
        }
    }
    SUBCASE("max rejects per step") {
        auto dyn = van_der_pol_dynamics();
        SolverConfig cfg;
        cfg.rtol = 1e-10;
        cfg.atol = 1e-10;
        cfg.h_init = 5.0; // guaranteed first-trial rejection
        cfg.max_rejects_per_step = 0;
        try {
            (void)integrate(*dyn, {2.0, 0.0}, {}, 0.0, 10.0, tableaus::dormand_prince_45(), cfg);
            FAIL("expected an error");
        } catch (const OdeError& e) {
            CHECK(e.code() == ErrorCode::MaxRejectsExceeded);
        }
    }
    SUBCASE("non-finite dynamics output") {
        odegrad::testing::QuadraticBlowupDynamics blowup;
        SolverConfig cfg;
        cfg.h_init = 0.5;
        try {
            (void)integrate(blowup, {1e200}, {}, 0.0, 1.0, tableaus::euler(), cfg);
            FAIL("expected an error");
        } catch (const OdeError& e) {
            CHECK(e.code() == ErrorCode::NonfiniteState);
        }
    }
}

TEST_CASE("integrate_piecewise chains segments through the sample times") {
    auto dyn = linear_dynamics(1.0);
    SolverConfig cfg;
    cfg.rtol = 1e-8;
    cfg.atol = 1e-8;
    std::vector<double> times{0.0, 0.25, 0.5, 1.0};
    auto traj = integrate_piecewise(*dyn, {1.0}, {1.0}, times, tableaus::dormand_prince_45(), cfg);
    REQUIRE(traj.size() == 4);
    CHECK(traj[0][0] == 1.0);
    CHECK(traj[3][0] == doctest::Approx(2.718281828459045).epsilon(1e-6));
}
