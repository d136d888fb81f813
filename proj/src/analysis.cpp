#include "odegrad/analysis.hpp"

#include <cmath>
#include <limits>

namespace odegrad {

ParamVector fd_gradient(const std::function<double(const ParamVector&)>& loss_fn,
                        const ParamVector& theta, const FdOracleConfig& cfg) {
    if (!(cfg.epsilon > 0.0))
        throw OdeError(ErrorCode::InvalidArgument, "fd_gradient: epsilon must be > 0");
    ParamVector g(theta.size());
    ParamVector probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + cfg.epsilon;
        const double up = loss_fn(probe);
        probe[i] = theta[i] - cfg.epsilon;
        const double down = loss_fn(probe);
        probe[i] = theta[i];
        if (!std::isfinite(up) || !std::isfinite(down))
            throw OdeError(ErrorCode::NonfiniteLoss,
                           "probe at coordinate " + std::to_string(i) + " diverged");
        g[i] = (up - down) / (2.0 * cfg.epsilon);
    }
    return g;
}

double fd_directional(const std::function<double(const ParamVector&)>& loss_fn,
                      const ParamVector& theta, const ParamVector& direction,
                      const FdOracleConfig& cfg) {
    require_dim(direction.size(), theta.size(), "fd_directional direction");
    ParamVector probe(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) probe[i] = theta[i] + cfg.epsilon * direction[i];
    const double up = loss_fn(probe);
    for (std::size_t i = 0; i < theta.size(); ++i) probe[i] = theta[i] - cfg.epsilon * direction[i];
    const double down = loss_fn(probe);
    if (!std::isfinite(up) || !std::isfinite(down))
        throw OdeError(ErrorCode::NonfiniteLoss, "directional probe diverged");
    return (up - down) / (2.0 * cfg.epsilon);
}

double loglog_slope(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 2)
        throw OdeError(ErrorCode::InvalidArgument, "loglog_slope: need at least 2 points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(series.size());
    for (const auto& [x, y] : series) {
        if (!(x > 0.0) || !(y > 0.0))
            throw OdeError(ErrorCode::DegenerateFit, "nonpositive value in log-log fit");
        const double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw OdeError(ErrorCode::DegenerateFit, "log-log fit is singular");
    return (n * sxy - sx * sy) / denom;
}

namespace {

long steps_for(double span, double h) {
    const double ratio = std::abs(span) / h;
    const long n = std::lround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9)
        throw OdeError(ErrorCode::InvalidArgument,
                       "stepsize " + std::to_string(h) + " does not tile the interval");
    return n;
}

} // namespace

double convergence_order(const DifferentiableDynamics& dyn, const StateVector& z0,
                         const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                         const std::vector<double>& h_list, const StateVector& reference) {
    if (h_list.size() < 4)
        throw OdeError(ErrorCode::InvalidArgument, "convergence_order: need >= 4 stepsizes");
    const ButcherTableau fixed = tb.adaptive() ? as_fixed_step(tb) : tb;
    std::vector<std::pair<double, double>> series;
    series.reserve(h_list.size());
    const double scale = 1.0 + norm2(reference);
    for (double h : h_list) {
        SolverConfig cfg;
        cfg.fixed_steps = static_cast<int>(steps_for(T - t0, h));
        IntegrationResult res = integrate(dyn, z0, theta, t0, T, fixed, cfg);
        const double err = norm2(sub(res.z_final, reference));
        if (err <= 64.0 * std::numeric_limits<double>::epsilon() * scale)
            throw OdeError(ErrorCode::DegenerateFit,
                           "error at h=" + std::to_string(h) + " is at machine precision");
        series.emplace_back(h, err);
    }
    return loglog_slope(series);
}

ReverseErrorReport reverse_reconstruction(const DifferentiableDynamics& dyn, const StateVector& z0,
                                          const ParamVector& theta, double t0, double T,
                                          const ButcherTableau& tb, const SolverConfig& cfg) {
    ReverseErrorReport rep;
    IntegrationResult fwd = integrate_final_state(dyn, z0, theta, t0, T, tb, cfg);
    rep.forward_terminal = fwd.z_final;
    IntegrationResult rev = integrate_final_state(dyn, fwd.z_final, theta, T, t0, tb, cfg);
    rep.reconstructed_initial = rev.z_final;
    rep.abs_error = norm2(sub(z0, rev.z_final));
    return rep;
}

ReverseErrorReport reverse_error_vs_stepsize(const DifferentiableDynamics& dyn,
                                             const StateVector& z0, const ParamVector& theta,
                                             double t0, double T, const ButcherTableau& tb_fixed,
                                             const std::vector<double>& h_list) {
    if (tb_fixed.adaptive())
        throw OdeError(ErrorCode::InvalidArgument, "reverse_error_vs_stepsize: tableau must be fixed-step");
    ReverseErrorReport rep;
    for (double h : h_list) {
        SolverConfig cfg;
        cfg.fixed_steps = static_cast<int>(steps_for(T - t0, h));
        ReverseErrorReport one = reverse_reconstruction(dyn, z0, theta, t0, T, tb_fixed, cfg);
        rep.forward_terminal = std::move(one.forward_terminal);
        rep.reconstructed_initial = std::move(one.reconstructed_initial);
        rep.abs_error = one.abs_error;
        rep.series.emplace_back(h, one.abs_error);
    }
    return rep;
}

ReverseErrorReport reverse_leg_error_vs_stepsize(const DifferentiableDynamics& dyn,
                                                 const StateVector& z0, const ParamVector& theta,
                                                 double t0, double T, const ButcherTableau& tb_fixed,
                                                 const std::vector<double>& h_list) {
    if (tb_fixed.adaptive())
        throw OdeError(ErrorCode::InvalidArgument, "reverse_leg_error_vs_stepsize: tableau must be fixed-step");
    SolverConfig tight;
    tight.rtol = 1e-13;
    tight.atol = 1e-13;
    IntegrationResult ref =
        integrate_final_state(dyn, z0, theta, t0, T, tableaus::dormand_prince_45(), tight);
    ReverseErrorReport rep;
    rep.forward_terminal = ref.z_final;
    for (double h : h_list) {
        SolverConfig cfg;
        cfg.fixed_steps = static_cast<int>(steps_for(T - t0, h));
        IntegrationResult rev = integrate_final_state(dyn, ref.z_final, theta, T, t0, tb_fixed, cfg);
        rep.reconstructed_initial = std::move(rev.z_final);
        rep.abs_error = norm2(sub(z0, rep.reconstructed_initial));
        rep.series.emplace_back(h, rep.abs_error);
    }
    return rep;
}

double checkpoint_replay_error(const CheckpointCache& cache, const StateVector& z0) {
    if (cache.z_values.empty())
        throw OdeError(ErrorCode::InvalidArgument, "checkpoint_replay_error: cache has no states");
    return norm2(sub(z0, cache.z_values.front()));
}

} // namespace odegrad
