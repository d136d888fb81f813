#ifndef ODEGRAD_SOLVER_HPP
#define ODEGRAD_SOLVER_HPP

#include <optional>

#include "odegrad/dynamics.hpp"
#include "odegrad/tableau.hpp"
#include "odegrad/tape.hpp"
#include "odegrad/vec.hpp"

namespace odegrad {

struct SolverConfig {
    double rtol = 1e-3;
    double atol = 1e-6;
    std::optional<double> h_init;    // unset = choose automatically (initial_step)
    double safety = 0.9;
    double min_factor = 0.2;
    double max_factor = 10.0;
    int max_rejects_per_step = 20;
    long max_steps = 1000000;        // accepted-step budget
    std::optional<double> h_min;     // unset = 1e-12 * |T - t0|
    int fixed_steps = 0;             // fixed-step tableaux: number of equal steps

    void validate() const;
};

struct StepOutcome {
    StateVector z_new;
    double err_norm = 0.0; // scaled RMS estimate; 0 for fixed-step tableaux
    std::vector<StateVector> stage_derivs;
    int f_evals = 0;
};

/// Accepted discretization points and states recorded by the forward pass.
/// time_points[0] == t0 and time_points.back() == T exactly; z_values[0] is
/// the input initial state. Strictly monotone in the integration direction.
struct CheckpointCache {
    std::vector<double> time_points;
    std::vector<StateVector> z_values;
    long accepted_steps = 0;
    long rejected_steps = 0;
    long total_f_evals = 0;
};

struct IntegrationResult {
    StateVector z_final;
    CheckpointCache cache;
};

/// Scaled RMS error norm: rms_i(err[i] / (atol + rtol * max(|z_old[i]|, |z_new[i]|))).
/// A value <= 1 means the step meets tolerance.
double error_norm(const StateVector& err_vec, const StateVector& z_old, const StateVector& z_new,
                  double atol, double rtol);

/// Next stepsize from the elementary controller:
/// h * clamp(safety * err_norm^(-1/(order+1)), min_factor, max_factor),
/// with err_norm == 0 mapped to h * max_factor. Throws StepUnderflow when
/// |result| < h_min.
double propose_step(double err_norm, double h, int order, const SolverConfig& cfg, double h_min);

/// Stepsize heuristic from the scaled state/derivative norms refined by one
/// trial Euler step; returns a positive magnitude clamped to (h_min, |T - t0|].
double initial_step(const DifferentiableDynamics& dyn, double t0, const StateVector& z0,
                    const ParamVector& theta, double T, int order, const SolverConfig& cfg);

/// One explicit Runge-Kutta step. Negative h performs a reverse-time step.
/// `first_stage`, when given, is reused as k_1 (saving one evaluation);
/// it must equal f(t, z, theta).
StepOutcome step(const ButcherTableau& tb, const DifferentiableDynamics& dyn, double t,
                 const StateVector& z, const ParamVector& theta, double h, double atol,
                 double rtol, const StateVector* first_stage = nullptr);

/// Adaptive (or fixed-step) integration from t0 to T recording the
/// checkpoint cache. The final step is truncated so the last time point is
/// exactly T. Rejected trials are discarded from the cache but counted.
IntegrationResult integrate(const DifferentiableDynamics& dyn, const StateVector& z0,
                            const ParamVector& theta, double t0, double T,
                            const ButcherTableau& tb, const SolverConfig& cfg);

/// Same loop without retaining states (counters and time bookkeeping only);
/// cache.z_values stays empty.
IntegrationResult integrate_final_state(const DifferentiableDynamics& dyn, const StateVector& z0,
                                        const ParamVector& theta, double t0, double T,
                                        const ButcherTableau& tb, const SolverConfig& cfg);

/// Integration that additionally records every trial step (including
/// rejections and the controller chain) onto `tape` for direct
/// backpropagation through the solver.
IntegrationResult integrate_recording(const DifferentiableDynamics& dyn, const StateVector& z0,
                                      const ParamVector& theta, double t0, double T,
                                      const ButcherTableau& tb, const SolverConfig& cfg,
                                      ForwardTape& tape);

/// Chained segment-by-segment integration through the given sample times
/// (times[0] is the time of z0). Returns the state at every sample time,
/// index 0 being z0 itself. Each segment starts from the previous segment's
/// numerical end state.
std::vector<StateVector> integrate_piecewise(const DifferentiableDynamics& dyn,
                                             const StateVector& z0, const ParamVector& theta,
                                             std::span<const double> times,
                                             const ButcherTableau& tb, const SolverConfig& cfg);

} // namespace odegrad

#endif
