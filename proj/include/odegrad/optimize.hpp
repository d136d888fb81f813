#ifndef ODEGRAD_OPTIMIZE_HPP
#define ODEGRAD_OPTIMIZE_HPP

#include "odegrad/dataset.hpp"
#include "odegrad/gradients.hpp"

namespace odegrad {

struct OptimizerConfig {
    enum class Kind { Adam, Sgd };
    Kind kind = Kind::Adam;
    double initial_lr = 0.1;
    double decay = 0.99;
    int epochs = 100;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const;
};

/// lr = initial_lr * decay^epoch
double lr_schedule(double initial_lr, double decay, int epoch);

struct AdamMoments {
    ParamVector m, v;
};

/// Bias-corrected Adam search direction m_hat / (sqrt(v_hat) + eps);
/// step_index starts at 1. Moments are zero-initialized on first use and
/// carried between calls.
ParamVector adam_direction(const ParamVector& grad, AdamMoments& moments, long step_index,
                           const OptimizerConfig& cfg);

/// Standard Adam update: theta -= lr * adam_direction(...).
void adam_step(ParamVector& theta, const ParamVector& grad, AdamMoments& moments, long step_index,
               double lr, const OptimizerConfig& cfg);

void sgd_step(ParamVector& theta, const ParamVector& grad, double lr);

struct TrajectoryLossOptions {
    bool positions_only = true; // penalize position coordinates only
};

struct TrajectoryLossResult {
    double loss = 0.0;
    ParamVector grad;
    CostStats stats;
};

/// Mean squared error of the integrated trajectory against the first
/// n_samples dataset observations (n_samples includes the initial point,
/// which anchors the integration and carries no residual). Integrates
/// segment-by-segment between consecutive sample times, carrying the
/// gradient through every segment with the chosen method.
TrajectoryLossResult trajectory_mse_loss(const DifferentiableDynamics& dyn,
                                         const ParamVector& theta, const StateVector& z0,
                                         const TrajectoryDataset& ds, std::size_t n_samples,
                                         const ButcherTableau& tb, const SolverConfig& cfg,
                                         Method method, const TrajectoryLossOptions& opts = {});

/// Loss only, over the full dataset range (used for test MSE).
double evaluate_trajectory_mse(const DifferentiableDynamics& dyn, const ParamVector& theta,
                               const StateVector& z0, const TrajectoryDataset& ds,
                               const ButcherTableau& tb, const SolverConfig& cfg,
                               const TrajectoryLossOptions& opts = {});

struct FitOptions {
    bool log_reparam = false; // optimize log(theta); keeps parameters positive
    TrajectoryLossOptions loss;
};

struct FitReport {
    ParamVector final_theta;
    std::vector<double> loss_history; // per-epoch training loss, pre-update
    double train_mse = 0.0;
    double test_mse = 0.0;
    CostStats grad_stats; // summed over epochs (peak_tape_nodes: maximum)
};

/// Full-batch gradient descent on the dataset's training split, with the
/// decayed learning-rate schedule; test MSE is evaluated over the full range
/// by integrating from the dataset's initial point with the fitted
/// parameters. Deterministic given the configs.
FitReport fit(const DifferentiableDynamics& dyn, const TrajectoryDataset& ds, ParamVector theta0,
              const OptimizerConfig& opt_cfg, const SolverConfig& solver_cfg,
              const ButcherTableau& tb, Method method, const FitOptions& opts = {});

} // namespace odegrad

#endif
