#ifndef ODEGRAD_ANALYSIS_HPP
#define ODEGRAD_ANALYSIS_HPP

#include <functional>
#include <utility>

#include "odegrad/solver.hpp"

namespace odegrad {

struct FdOracleConfig {
    double epsilon = 1e-5; // central-difference half-width
};

/// Central finite differences per coordinate:
/// g_i = (L(theta + eps e_i) - L(theta - eps e_i)) / (2 eps).
/// Throws NonfiniteLoss when a probe diverges.
ParamVector fd_gradient(const std::function<double(const ParamVector&)>& loss_fn,
                        const ParamVector& theta, const FdOracleConfig& cfg = {});

/// Directional central difference (L(theta + eps u) - L(theta - eps u)) / (2 eps).
double fd_directional(const std::function<double(const ParamVector&)>& loss_fn,
                      const ParamVector& theta, const ParamVector& direction,
                      const FdOracleConfig& cfg = {});

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<std::pair<double, double>>& series);

/// Empirical convergence order: fixed-step integrations of f over [t0, T]
/// at each h, end-state error against `reference`, least-squares slope of
/// log error vs log h. Throws DegenerateFit when an error underflows toward
/// machine precision (reduce the h range).
double convergence_order(const DifferentiableDynamics& dyn, const StateVector& z0,
                         const ParamVector& theta, double t0, double T, const ButcherTableau& tb,
                         const std::vector<double>& h_list, const StateVector& reference);

struct ReverseErrorReport {
    StateVector forward_terminal;     // z(T)
    StateVector reconstructed_initial; // reverse-time solution at t0
    double abs_error = 0.0;            // ||z0 - z_bar(t0)||_2
    std::vector<std::pair<double, double>> series; // (h, abs_error) for sweeps
};

/// Integrates t0 -> T, then uses z(T) as the initial condition of a second
/// integration T -> t0 (the adjoint method's reverse reconstruction, without
/// the costate), and reports the reconstruction error at t0.
ReverseErrorReport reverse_reconstruction(const DifferentiableDynamics& dyn, const StateVector& z0,
                                          const ParamVector& theta, double t0, double T,
                                          const ButcherTableau& tb, const SolverConfig& cfg);

/// Reconstruction error of fixed-step round trips for each h in `h_list`
/// (decreasing). The log-log slope of the series estimates the decay order
/// of the reverse error. Note: when forward and reverse legs share the grid,
/// the leading local errors of an even-order method cancel pairwise, so the
/// round-trip error decays one order faster than the reverse leg alone.
ReverseErrorReport reverse_error_vs_stepsize(const DifferentiableDynamics& dyn,
                                             const StateVector& z0, const ParamVector& theta,
                                             double t0, double T, const ButcherTableau& tb_fixed,
                                             const std::vector<double>& h_list);

/// Reverse-leg-only variant: the reverse integration starts from a
/// tight-tolerance reference z(T) rather than the same-h forward solution,
/// isolating the reverse-pass reconstruction error (O(h^p) for an order-p
/// method) from the round-trip cancellation.
ReverseErrorReport reverse_leg_error_vs_stepsize(const DifferentiableDynamics& dyn,
                                                 const StateVector& z0, const ParamVector& theta,
                                                 double t0, double T, const ButcherTableau& tb_fixed,
                                                 const std::vector<double>& h_list);

/// Reconstruction error of the checkpointed trajectory: replaying the cache
/// recovers the recorded initial state exactly, so this returns
/// ||z0 - cache.z_values[0]|| (identically zero for the producing run).
double checkpoint_replay_error(const CheckpointCache& cache, const StateVector& z0);

} // namespace odegrad

#endif
