#include "odegrad/optimize.hpp"

#include <cmath>

namespace odegrad {

void OptimizerConfig::validate() const {
    if (!(initial_lr > 0.0)) throw OdeError(ErrorCode::InvalidArgument, "initial_lr must be > 0");
    if (!(decay > 0.0 && decay <= 1.0))
        throw OdeError(ErrorCode::InvalidArgument, "decay must be in (0, 1]");
    if (epochs < 1) throw OdeError(ErrorCode::InvalidArgument, "epochs must be >= 1");
}

double lr_schedule(double initial_lr, double decay, int epoch) {
    if (epoch < 0) throw OdeError(ErrorCode::InvalidArgument, "epoch must be >= 0");
    return initial_lr * std::pow(decay, epoch);
}

ParamVector adam_direction(const ParamVector& grad, AdamMoments& moments, long step_index,
                           const OptimizerConfig& cfg) {
    if (step_index < 1) throw OdeError(ErrorCode::InvalidArgument, "adam step_index starts at 1");
    if (moments.m.empty()) {
        moments.m.assign(grad.size(), 0.0);
        moments.v.assign(grad.size(), 0.0);
    }
    require_dim(grad.size(), moments.m.size(), "adam_direction grad");
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step_index));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step_index));
    ParamVector dir(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
        moments.m[i] = cfg.adam_beta1 * moments.m[i] + (1.0 - cfg.adam_beta1) * grad[i];
        moments.v[i] = cfg.adam_beta2 * moments.v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
        const double m_hat = moments.m[i] / bc1;
        const double v_hat = moments.v[i] / bc2;
        dir[i] = m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
    return dir;
}

void adam_step(ParamVector& theta, const ParamVector& grad, AdamMoments& moments, long step_index,
               double lr, const OptimizerConfig& cfg) {
    require_dim(grad.size(), theta.size(), "adam_step grad");
    const ParamVector dir = adam_direction(grad, moments, step_index, cfg);
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * dir[i];
}

void sgd_step(ParamVector& theta, const ParamVector& grad, double lr) {
    require_dim(grad.size(), theta.size(), "sgd_step grad");
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
}

namespace {

std::size_t penalized_coords(const TrajectoryDataset& ds, const TrajectoryLossOptions& opts) {
    const std::size_t d = ds.states.front().size();
    return opts.positions_only ? d / 2 : d;
}

// Direct residual seed at one sample: dL/dz_m restricted to penalized coords.
StateVector residual_seed(const StateVector& z, const StateVector& obs, std::size_t coords,
                          double inv_count) {
    StateVector seed(z.size(), 0.0);
    for (std::size_t p = 0; p < coords; ++p) seed[p] = 2.0 * (z[p] - obs[p]) * inv_count;
    return seed;
}

} // namespace

TrajectoryLossResult trajectory_mse_loss(const DifferentiableDynamics& dyn,
                                         const ParamVector& theta, const StateVector& z0,
                                         const TrajectoryDataset& ds, std::size_t n_samples,
                                         const ButcherTableau& tb, const SolverConfig& cfg,
                                         Method method, const TrajectoryLossOptions& opts) {
    ds.validate();
    if (n_samples > ds.size())
        throw OdeError(ErrorCode::InvalidArgument, "trajectory_mse_loss: n_samples > dataset size");
    TrajectoryLossResult out;
    out.grad.assign(theta.size(), 0.0);
    if (n_samples <= 1) return out; // single anchor point: nothing to compare

    const std::size_t coords = penalized_coords(ds, opts);
    const std::size_t n_seg = n_samples - 1;
    const double inv_count = 1.0 / (static_cast<double>(n_seg) * static_cast<double>(coords));

    // forward walk, keeping per-segment reverse artifacts
    std::vector<StateVector> z_at(n_samples);
    z_at[0] = z0;
    std::vector<CheckpointCache> caches;    // ACA / naive
    std::vector<ForwardTape> tapes;         // naive
    if (method != Method::Adjoint) caches.resize(n_seg);
    if (method == Method::Naive) tapes.resize(n_seg);

    for (std::size_t m = 1; m <= n_seg; ++m) {
        const double ta = ds.times[m - 1], tb_time = ds.times[m];
        try {
            IntegrationResult r;
            switch (method) {
                case Method::Aca:
                    r = integrate(dyn, z_at[m - 1], theta, ta, tb_time, tb, cfg);
                    break;
                case Method::Naive:
                    r = integrate_recording(dyn, z_at[m - 1], theta, ta, tb_time, tb, cfg,
                                            tapes[m - 1]);
                    break;
                case Method::Adjoint:
                    r = integrate_final_state(dyn, z_at[m - 1], theta, ta, tb_time, tb, cfg);
                    break;
            }
            z_at[m] = r.z_final;
            out.stats.forward_f_evals += r.cache.total_f_evals;
            out.stats.forward_accepted += r.cache.accepted_steps;
            out.stats.forward_rejected += r.cache.rejected_steps;
            if (method != Method::Adjoint) caches[m - 1] = std::move(r.cache);
        } catch (const OdeError& e) {
            if (e.code() == ErrorCode::NonfiniteState)
                throw OdeError(ErrorCode::Diverged, "segment [" + std::to_string(ta) + ", " +
                                                        std::to_string(tb_time) + "]: " + e.what());
            throw;
        }
    }

    double loss = 0.0;
    for (std::size_t m = 1; m <= n_seg; ++m) {
        for (std::size_t p = 0; p < coords; ++p) {
            const double r = z_at[m][p] - ds.states[m][p];
            loss += r * r;
        }
    }
    out.loss = loss * inv_count;

    // reverse walk, chaining segment pullbacks
    StateVector a = residual_seed(z_at[n_seg], ds.states[n_seg], coords, inv_count);
    for (std::size_t m = n_seg; m >= 1; --m) {
        SeededBackward sb;
        switch (method) {
            case Method::Aca:
                sb = aca_backward(dyn, theta, tb, cfg, caches[m - 1], a, &out.stats);
                break;
            case Method::Naive:
                sb = naive_backward(dyn, theta, tb, cfg, tapes[m - 1], caches[m - 1], a, nullptr);
                out.stats.peak_tape_nodes =
                    std::max(out.stats.peak_tape_nodes, tapes[m - 1].node_count());
                break;
            case Method::Adjoint:
                sb = adjoint_backward(dyn, theta, tb, cfg, ds.times[m - 1], ds.times[m], z_at[m], a,
                                      &out.stats);
                break;
        }
        axpy(1.0, sb.d_loss_d_theta, out.grad);
        a = std::move(sb.d_loss_d_z0);
        if (m >= 2) {
            StateVector direct = residual_seed(z_at[m - 1], ds.states[m - 1], coords, inv_count);
            axpy(1.0, direct, a);
        }
    }
    return out;
}

double evaluate_trajectory_mse(const DifferentiableDynamics& dyn, const ParamVector& theta,
                               const StateVector& z0, const TrajectoryDataset& ds,
                               const ButcherTableau& tb, const SolverConfig& cfg,
                               const TrajectoryLossOptions& opts) {
    ds.validate();
    if (ds.size() <= 1) return 0.0;
    const std::size_t coords = penalized_coords(ds, opts);
    const std::vector<StateVector> traj = integrate_piecewise(dyn, z0, theta, ds.times, tb, cfg);
    double loss = 0.0;
    for (std::size_t m = 1; m < ds.size(); ++m)
        for (std::size_t p = 0; p < coords; ++p) {
            const double r = traj[m][p] - ds.states[m][p];
            loss += r * r;
        }
    return loss / (static_cast<double>(ds.size() - 1) * static_cast<double>(coords));
}

FitReport fit(const DifferentiableDynamics& dyn, const TrajectoryDataset& ds, ParamVector theta0,
              const OptimizerConfig& opt_cfg, const SolverConfig& solver_cfg,
              const ButcherTableau& tb, Method method, const FitOptions& opts) {
    opt_cfg.validate();
    ds.validate();
    const std::size_t n_train = ds.train_count();
    if (n_train < 2) throw OdeError(ErrorCode::InvalidArgument, "fit: training split is empty");
    require_dim(theta0.size(), static_cast<std::size_t>(dyn.param_dim()), "fit theta0");

    const StateVector& z0 = ds.states.front();
    ParamVector theta = theta0;
    if (opts.log_reparam)
        for (double x : theta0)
            if (!(x > 0.0))
                throw OdeError(ErrorCode::InvalidArgument, "fit: log_reparam needs positive theta0");

    FitReport rep;
    rep.loss_history.reserve(static_cast<std::size_t>(opt_cfg.epochs));
    AdamMoments moments;
    for (int epoch = 0; epoch < opt_cfg.epochs; ++epoch) {
        TrajectoryLossResult lr = trajectory_mse_loss(dyn, theta, z0, ds, n_train, tb, solver_cfg,
                                                      method, opts.loss);
        if (!std::isfinite(lr.loss))
            throw OdeError(ErrorCode::Diverged, "training loss diverged at epoch " + std::to_string(epoch));
        rep.loss_history.push_back(lr.loss);
        rep.grad_stats.forward_f_evals += lr.stats.forward_f_evals;
        rep.grad_stats.backward_f_evals += lr.stats.backward_f_evals;
        rep.grad_stats.forward_accepted += lr.stats.forward_accepted;
        rep.grad_stats.forward_rejected += lr.stats.forward_rejected;
        rep.grad_stats.reverse_accepted += lr.stats.reverse_accepted;
        rep.grad_stats.reverse_rejected += lr.stats.reverse_rejected;
        rep.grad_stats.peak_tape_nodes =
            std::max(rep.grad_stats.peak_tape_nodes, lr.stats.peak_tape_nodes);

        ParamVector g = std::move(lr.grad);
        if (opts.log_reparam)
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= theta[i]; // chain rule d/dlog

        const double lr_epoch = lr_schedule(opt_cfg.initial_lr, opt_cfg.decay, epoch);
        ParamVector dir;
        if (opt_cfg.kind == OptimizerConfig::Kind::Adam)
            dir = adam_direction(g, moments, epoch + 1, opt_cfg);
        else
            dir = g;
        if (opts.log_reparam) {
            // log-space step applied multiplicatively; a zero step is exact
            for (std::size_t i = 0; i < theta.size(); ++i)
                theta[i] *= std::exp(-lr_epoch * dir[i]);
        } else {
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr_epoch * dir[i];
        }
    }

    rep.final_theta = theta;
    TrajectoryDataset train_view;
    train_view.times.assign(ds.times.begin(), ds.times.begin() + static_cast<std::ptrdiff_t>(n_train));
    train_view.states.assign(ds.states.begin(),
                             ds.states.begin() + static_cast<std::ptrdiff_t>(n_train));
    train_view.train_end = ds.train_end;
    rep.train_mse = evaluate_trajectory_mse(dyn, theta, z0, train_view, tb, solver_cfg, opts.loss);
    rep.test_mse = evaluate_trajectory_mse(dyn, theta, z0, ds, tb, solver_cfg, opts.loss);
    return rep;
}

} // namespace odegrad
