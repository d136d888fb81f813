#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "odegrad/analysis.hpp"
#include "odegrad/gradients.hpp"
#include "odegrad/three_body.hpp"

using namespace odegrad;
using odegrad::testing::ConstantDynamics;

namespace {

constexpr double kTwoESquared = 14.7781121978613; // 2 e^2

SolverConfig tol_cfg(double tol) {
    SolverConfig cfg;
    cfg.rtol = tol;
    cfg.atol = tol;
    return cfg;
}

double loss_at_theta(const DifferentiableDynamics& dyn, const StateVector& z0,
                     const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                     const SolverConfig& cfg, const LossSpec& loss) {
    auto r = integrate_final_state(dyn, z0, theta, t0, T, tb, cfg);
    return terminal_loss_grad(loss, r.z_final).loss;
}

struct GradcheckProblem {
    std::string name;
    std::shared_ptr<DifferentiableDynamics> dyn;
    StateVector z0;
    ParamVector theta;
    double T = 1.0;
    LossSpec loss;
};

std::vector<GradcheckProblem> gradcheck_suite() {
    std::vector<GradcheckProblem> suite;
    suite.push_back({"linear", linear_dynamics(1.0), {1.0}, {1.0}, 1.0, {}});

    {
        GradcheckProblem p;
        p.name = "vdp_mse";
        p.dyn = van_der_pol_dynamics();
        p.z0 = {2.0, 0.0};
        p.theta = {};
        p.T = 2.0;
        p.loss.kind = LossKind::MseToTarget;
        p.loss.target = {0.5, -0.5};
        suite.push_back(std::move(p));
    }
    {
        GradcheckProblem p;
        p.name = "fc";
        p.dyn = fc_dynamics(augmented_feature_dim(), 4);
        p.z0 = {0.6, 0.0, 0.1, -0.5, 0.4, 0.0, 0.1, -0.6, 0.3,
                0.1, 0.2, 0.0, -0.1, 0.0, 0.1, 0.0, -0.2, 0.05};
        p.theta = fc_random_params(augmented_feature_dim(), 4, 11, 0.2);
        p.T = 0.5;
        suite.push_back(std::move(p));
    }
    {
        GradcheckProblem p;
        p.name = "three_body";
        p.dyn = three_body_dynamics(1.0);
        p.z0 = {1.0, 0.0, 0.0, -1.0, 0.2, 0.0, 0.3, 1.1, -0.4,
                0.0, 0.3, 0.05, 0.1, -0.2, 0.0, -0.1, 0.0, 0.1};
        p.theta = {1.0, 2.0, 3.0};
        p.T = 0.5;
        suite.push_back(std::move(p));
    }
    return suite;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

} // namespace

TEST_CASE("terminal loss values and seeds") {
    auto sq = terminal_loss_grad({}, {2.0});
    CHECK(sq.loss == 4.0);
    CHECK(sq.seed == StateVector{4.0});

    LossSpec mse{LossKind::MseToTarget, {1.0, -1.0}};
    auto at_min = terminal_loss_grad(mse, {1.0, -1.0});
    CHECK(at_min.loss == 0.0);
    CHECK(at_min.seed == StateVector{0.0, 0.0});

    // closed form of the toy problem: L = z0^2 exp(2kT)
    const double zT = 1.0 * std::exp(1.0);
    auto toy = terminal_loss_grad({}, {zT});
    CHECK(toy.loss == doctest::Approx(std::exp(2.0)).epsilon(1e-14));
}

TEST_CASE("grad_aca on the linear toy problem") {
    auto dyn = linear_dynamics(1.0);
    auto g = grad_aca(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(), tol_cfg(1e-5), {});
    CHECK(std::abs(g.d_loss_d_z0[0] - kTwoESquared) < 1e-3);
    // dL/dk = 2 T z0^2 e^{2kT} = 2 e^2 at k = z0 = T = 1
    CHECK(std::abs(g.d_loss_d_theta[0] - kTwoESquared) < 1e-3);
    CHECK(g.loss == doctest::Approx(std::exp(2.0)).epsilon(1e-4));
    CHECK(g.stats.forward_accepted > 0);
    CHECK(g.stats.reverse_accepted == 0);
    CHECK(g.stats.backward_f_evals == g.stats.forward_accepted * 7);
}

TEST_CASE("grad_aca with zero dynamics is exact") {
    ConstantDynamics zero({0.0});
    auto g = grad_aca(zero, {3.0}, {}, 0.0, 1.0, tableaus::dormand_prince_45(), tol_cfg(1e-5), {});
    CHECK(g.d_loss_d_z0 == StateVector{6.0});
    CHECK(g.d_loss_d_theta.empty());
    CHECK(g.loss == 9.0);
}

TEST_CASE("aca_backward detects a corrupted cache") {
    auto dyn = linear_dynamics(1.0);
    auto fwd = integrate(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(), tol_cfg(1e-5));
    auto lv = terminal_loss_grad({}, fwd.z_final);
    fwd.cache.z_values[1][0] += 1e-13;
    try {
        (void)aca_backward(*dyn, {1.0}, tableaus::dormand_prince_45(), tol_cfg(1e-5), fwd.cache,
                           lv.seed);
        FAIL("expected CACHE_MISMATCH");
    } catch (const OdeError& e) {
        CHECK(e.code() == ErrorCode::CacheMismatch);
    }
}

TEST_CASE("grad_adjoint on the linear toy problem") {
    auto dyn = linear_dynamics(1.0);
    auto g = grad_adjoint(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(),
                          tol_cfg(1e-5), {});
    CHECK(std::abs(g.d_loss_d_z0[0] - kTwoESquared) < 1e-3);
    CHECK(std::abs(g.d_loss_d_theta[0] - kTwoESquared) < 1e-3);
    CHECK(g.stats.reverse_accepted > 0);
}

TEST_CASE("grad_adjoint is exact for constant dynamics") {
    ConstantDynamics c({2.0});
    auto fwd = integrate_final_state(c, {0.5}, {}, 0.0, 1.0, tableaus::dormand_prince_45(),
                                     tol_cfg(1e-5));
    auto g = grad_adjoint(c, {0.5}, {}, 0.0, 1.0, tableaus::dormand_prince_45(), tol_cfg(1e-5), {});
    CHECK(fwd.z_final[0] == doctest::Approx(2.5).epsilon(1e-14));
    // the costate stays constant in reverse time: gradient of the computed
    // loss is exact, 2 * z(T) to the bit
    CHECK(g.d_loss_d_z0[0] == 2.0 * fwd.z_final[0]);
    CHECK(g.loss == fwd.z_final[0] * fwd.z_final[0]);
}

TEST_CASE("adjoint costate matches the closed form for f = kz") {
    auto dyn = linear_dynamics(1.0);
    AdjointTrace trace;
    GradientOptions opts;
    opts.trace = &trace;
    auto g = grad_adjoint(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(),
                          tol_cfg(1e-9), {}, opts);
    (void)g;
    REQUIRE(trace.times.size() >= 3);
    const double lambda_T = trace.costates.front()[0];
    CHECK(lambda_T == doctest::Approx(-2.0 * std::exp(1.0)).epsilon(1e-6));
    double worst = 0.0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        const double t = trace.times[i];
        const double analytic = lambda_T * std::exp(1.0 * (1.0 - t));
        worst = std::max(worst, rel_err(trace.costates[i][0], analytic));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("grad_naive on the linear toy problem (adaptive)") {
    auto dyn = linear_dynamics(1.0);
    auto g = grad_naive(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(), tol_cfg(1e-5), {});
    CHECK(std::abs(g.d_loss_d_z0[0] - kTwoESquared) < 1e-3);
    CHECK(std::abs(g.d_loss_d_theta[0] - kTwoESquared) < 1e-3);
    CHECK(g.stats.peak_tape_nodes > 0);
    CHECK(g.stats.backward_f_evals == 0); // tape replay re-uses stored stages
}

TEST_CASE("fixed-step Euler: naive equals ACA bitwise") {
    SolverConfig cfg;
    cfg.fixed_steps = 32;

    SUBCASE("linear problem") {
        auto dyn = linear_dynamics(1.0);
        auto a = grad_aca(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::euler(), cfg, {});
        auto n = grad_naive(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::euler(), cfg, {});
        CHECK(a.d_loss_d_z0[0] == n.d_loss_d_z0[0]);
        CHECK(a.d_loss_d_theta[0] == n.d_loss_d_theta[0]);
        CHECK(a.loss == n.loss);
    }
    SUBCASE("three-body problem") {
        auto dyn = three_body_dynamics(1.0);
        StateVector z0 = {1.0, 0.0, 0.0, -1.0, 0.2, 0.0, 0.3, 1.1, -0.4,
                          0.0, 0.3, 0.05, 0.1, -0.2, 0.0, -0.1, 0.0, 0.1};
        ParamVector th = {1.0, 2.0, 3.0};
        auto a = grad_aca(*dyn, z0, th, 0.0, 0.5, tableaus::euler(), cfg, {});
        auto n = grad_naive(*dyn, z0, th, 0.0, 0.5, tableaus::euler(), cfg, {});
        CHECK(bitwise_equal(a.d_loss_d_z0, n.d_loss_d_z0));
        CHECK(bitwise_equal(a.d_loss_d_theta, n.d_loss_d_theta));
    }
}

TEST_CASE("gradcheck: all methods against the central-difference oracle") {
    std::mt19937_64 rng(123);
    const FdOracleConfig fd_cfg;
    const SolverConfig cfg = tol_cfg(1e-7);
    const ButcherTableau tb = tableaus::dormand_prince_45();

    for (const auto& prob : gradcheck_suite()) {
        CAPTURE(prob.name);
        std::vector<std::pair<Method, double>> methods = {
            {Method::Aca, 1e-3}, {Method::Naive, 1e-3}, {Method::Adjoint, 1e-2}};
        for (auto [method, tol] : methods) {
            CAPTURE(method_name(method));
            auto g = gradient_dispatch(method, *prob.dyn, prob.z0, prob.theta, 0.0, prob.T, tb,
                                       cfg, prob.loss);
            double worst = 0.0;
            for (int probe = 0; probe < 10; ++probe) {
                if (!prob.theta.empty()) {
                    ParamVector u = testing::random_vec(rng, prob.theta.size());
                    const double fd = fd_directional(
                        [&](const ParamVector& th) {
                            return loss_at_theta(*prob.dyn, prob.z0, th, 0.0, prob.T, tb, cfg,
                                                 prob.loss);
                        },
                        prob.theta, u, fd_cfg);
                    worst = std::max(worst, rel_err(dot(g.d_loss_d_theta, u), fd));
                }
                StateVector uz = testing::random_vec(rng, prob.z0.size());
                const double fdz = fd_directional(
                    [&](const ParamVector& z) {
                        return loss_at_theta(*prob.dyn, z, prob.theta, 0.0, prob.T, tb, cfg,
                                             prob.loss);
                    },
                    prob.z0, uz, fd_cfg);
                worst = std::max(worst, rel_err(dot(g.d_loss_d_z0, uz), fdz));
            }
            CHECK(worst < tol);
        }
    }
}

TEST_CASE("adjoint loses to ACA on a nonlinear problem at loose tolerance") {
    auto vdp = van_der_pol_dynamics();
    const StateVector z0{2.0, 0.0};
    const LossSpec loss{LossKind::MseToTarget, {0.5, -0.5}};
    const ButcherTableau tb = tableaus::dormand_prince_45();
    const double T = 5.0;

    // oracle at tight tolerance
    SolverConfig tight = tol_cfg(1e-12);
    FdOracleConfig fdc;
    fdc.epsilon = 1e-6;
    ParamVector fd = fd_gradient(
        [&](const ParamVector& z) {
            auto r = integrate_final_state(*vdp, z, {}, 0.0, T, tb, tight);
            return terminal_loss_grad(loss, r.z_final).loss;
        },
        z0, fdc);

    SolverConfig loose = tol_cfg(1e-3);
    auto aca = grad_aca(*vdp, z0, {}, 0.0, T, tb, loose, loss);
    auto adj = grad_adjoint(*vdp, z0, {}, 0.0, T, tb, loose, loss);
    double err_aca = 0.0, err_adj = 0.0;
    for (int i = 0; i < 2; ++i) {
        err_aca = std::max(err_aca, std::abs(aca.d_loss_d_z0[static_cast<std::size_t>(i)] - fd[static_cast<std::size_t>(i)]));
        err_adj = std::max(err_adj, std::abs(adj.d_loss_d_z0[static_cast<std::size_t>(i)] - fd[static_cast<std::size_t>(i)]));
    }
    CHECK(err_adj > err_aca);

    // at rtol=atol=1e-2 the reverse-time pass leaves the stability region
    // entirely and the adjoint cannot produce a gradient at all
    CHECK_THROWS_AS((void)grad_adjoint(*vdp, z0, {}, 0.0, T, tb, tol_cfg(1e-2), loss), OdeError);
    CHECK_NOTHROW((void)grad_aca(*vdp, z0, {}, 0.0, T, tb, tol_cfg(1e-2), loss));
}

TEST_CASE("cost structure of the three methods") {
    auto dyn = van_der_pol_dynamics();
    const StateVector z0{2.0, 0.0};
    const SolverConfig cfg = tol_cfg(1e-6);
    const ButcherTableau tb = tableaus::dormand_prince_45();

    auto aca = grad_aca(*dyn, z0, {}, 0.0, 10.0, tb, cfg, {});
    auto adj = grad_adjoint(*dyn, z0, {}, 0.0, 10.0, tb, cfg, {});
    auto nai = grad_naive(*dyn, z0, {}, 0.0, 10.0, tb, cfg, {});

    // the run must exercise the rejection path for the tape comparison
    CHECK(nai.stats.forward_rejected > 0);

    CHECK(aca.stats.reverse_accepted == 0);
    CHECK(aca.stats.reverse_rejected == 0);
    CHECK(aca.stats.backward_f_evals == aca.stats.forward_accepted * tb.stages);
    CHECK(adj.stats.reverse_accepted > 0);

    auto fwd = integrate(*dyn, z0, {}, 0.0, 10.0, tb, cfg);
    CHECK(nai.stats.peak_tape_nodes > aca_equivalent_node_count(fwd.cache, tb));

    // shared forward semantics: same loss value for all three methods
    CHECK(aca.loss == adj.loss);
    CHECK(aca.loss == nai.loss);
}

TEST_CASE("dispatch delegates and validates") {
    auto dyn = linear_dynamics(1.0);
    const SolverConfig cfg = tol_cfg(1e-5);
    auto a = gradient_dispatch(Method::Aca, *dyn, {1.0}, {1.0}, 0.0, 1.0,
                               tableaus::dormand_prince_45(), cfg, {});
    auto b = grad_aca(*dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::dormand_prince_45(), cfg, {});
    CHECK(a.d_loss_d_z0[0] == b.d_loss_d_z0[0]);
    CHECK(a.d_loss_d_theta[0] == b.d_loss_d_theta[0]);

    SolverConfig fixed;
    fixed.fixed_steps = 16;
    double losses[3];
    int i = 0;
    for (Method m : {Method::Naive, Method::Adjoint, Method::Aca})
        losses[i++] = gradient_dispatch(m, *dyn, {1.0}, {1.0}, 0.0, 1.0, tableaus::rk4(), fixed, {})
                          .loss;
    CHECK(losses[0] == losses[1]);
    CHECK(losses[1] == losses[2]);

    CHECK_THROWS_AS((void)method_from_string("rprop"), OdeError);
}

TEST_CASE("naive tape overflow budget") {
    auto dyn = van_der_pol_dynamics();
    GradientOptions opts;
    opts.tape_node_budget = 50;
    try {
        (void)grad_naive(*dyn, {2.0, 0.0}, {}, 0.0, 10.0, tableaus::dormand_prince_45(),
                         tol_cfg(1e-6), {}, opts);
        FAIL("expected TAPE_OVERFLOW");
    } catch (const OdeError& e) {
        CHECK(e.code() == ErrorCode::TapeOverflow);
    }
}

TEST_CASE("ACA recomputation is bitwise on every suite problem") {
    // exercised implicitly by every grad_aca call (CACHE_MISMATCH otherwise);
    // run the whole suite once to witness it
    const SolverConfig cfg = tol_cfg(1e-7);
    for (const auto& prob : gradcheck_suite()) {
        CAPTURE(prob.name);
        CHECK_NOTHROW((void)grad_aca(*prob.dyn, prob.z0, prob.theta, 0.0, prob.T,
                                     tableaus::dormand_prince_45(), cfg, prob.loss));
    }
}
